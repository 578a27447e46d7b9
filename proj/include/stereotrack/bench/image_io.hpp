#pragma once

#include <string>

#include "stereotrack/core/image.hpp"

namespace stereotrack {

// 8-bit grayscale PGM (binary P5 or ASCII P2) and PNG (converted to gray).
// Throws DatasetError on missing or unreadable files.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& image);
GrayImage read_png(const std::string& path);
void write_png(const std::string& path, const GrayImage& image);

// Dispatches on the file extension.
GrayImage read_image(const std::string& path);

}  // namespace stereotrack

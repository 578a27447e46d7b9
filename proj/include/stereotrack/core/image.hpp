#pragma once

#include <cstdint>
#include <vector>

namespace stereotrack {

/// 8-bit grayscale image, row-major, no padding.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  bool empty() const { return width <= 0 || height <= 0; }
  std::size_t byte_size() const { return pixels.size(); }

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const std::uint8_t* row(int y) const { return pixels.data() + static_cast<std::size_t>(y) * width; }
  std::uint8_t* row(int y) { return pixels.data() + static_cast<std::size_t>(y) * width; }

  // Resizes in place; keeps capacity.
  void reshape(int w, int h) {
    width = w;
    height = h;
    pixels.resize(static_cast<std::size_t>(w) * h);
  }

  bool operator==(const GrayImage&) const = default;
};

/// Multi-scale image stack. Level l has floor(size0 / scale^l) pixels per axis.
struct ImagePyramid {
  std::vector<GrayImage> levels;
  double scale_factor = 1.2;

  int level_count() const { return static_cast<int>(levels.size()); }
  std::size_t byte_size() const {
    std::size_t total = 0;
    for (const GrayImage& level : levels) {
      total += level.byte_size();
    }
    return total;
  }
};

}  // namespace stereotrack

#pragma once

#include <stdexcept>
#include <string>

namespace stereotrack {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidDisparityError : public Error {
 public:
  using Error::Error;
};

class BorderError : public Error {
 public:
  using Error::Error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class StreamError : public Error {
 public:
  using Error::Error;
};

class InsufficientOverlapError : public Error {
 public:
  using Error::Error;
};

}  // namespace stereotrack

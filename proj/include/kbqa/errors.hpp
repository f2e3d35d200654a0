#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kbqa {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed line in a text input. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string &what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Corrupt or truncated binary artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace kbqa

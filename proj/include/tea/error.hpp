// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tea {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A precondition on argument values was violated (empty history, m < 2, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An input file or directory does not exist or cannot be opened.
class MissingInput : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage filtered everything away.
class EmptyData : public Error {
 public:
  using Error::Error;
};

/// Loss or parameters became NaN/Inf.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint / dataset / config mismatch, or a corrupted artifact header.
class Incompatible : public Error {
 public:
  using Error::Error;
};

}  // namespace tea

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mllab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Errors caused by malformed caller input (the CLI maps these to exit code 2).
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InputError {
 public:
  using InputError::InputError;
};

class NonFiniteValue : public InputError {
 public:
  using InputError::InputError;
};

class EmptyFile : public InputError {
 public:
  using InputError::InputError;
};

/// CSV parse failure. Row and column are 1-based; the header is row 1.
class ParseError : public InputError {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : InputError("parse error at row " + std::to_string(row) + ", column " +
                   std::to_string(column) + ": " + what),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// The jitter schedule was exhausted without a successful factorization.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// A deep kernel was evaluated without network weights.
class MissingNetwork : public Error {
 public:
  using Error::Error;
};

/// All targets are zero, so the profiled amplitude is zero and its log undefined.
class ZeroTarget : public Error {
 public:
  using Error::Error;
};

}  // namespace mllab

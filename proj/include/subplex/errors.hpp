#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subplex {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Rows are 1-based data rows (the header is row 0).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::string column, const std::string& what)
      : Error("row " + std::to_string(row) + ", column '" + column + "': " + what),
        row_(row),
        column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// Input that parses but violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A count or index outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Selection index outside [0, n); carries the offending index for API responses.
class IndexRangeError : public RangeError {
 public:
  IndexRangeError(std::size_t index, std::size_t n)
      : RangeError("index " + std::to_string(index) + " out of range for " + std::to_string(n) + " rows"),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace subplex

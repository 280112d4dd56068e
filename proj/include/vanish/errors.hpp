#pragma once

#include <stdexcept>
#include <string>

namespace vanish {

/// Caller supplied malformed data (bad dimensions, non-finite values, empty sets).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A polynomial references something that does not exist in its registry.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An operation was asked to exceed a configured size cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Text input could not be parsed; carries the offending row and column.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long row, long col)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", col " + std::to_string(col) + ")"),
        row_(row),
        col_(col) {}

  long row() const noexcept { return row_; }
  long col() const noexcept { return col_; }

 private:
  long row_;
  long col_;
};

}  // namespace vanish

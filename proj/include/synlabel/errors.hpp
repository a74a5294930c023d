#pragma once

#include <stdexcept>
#include <string>

namespace synlabel {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract violation by the caller (bad dimensions, out-of-range parameter).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A dataset or file could not be read, or holds values that break an invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& message, long row = -1, long column = -1)
      : DataError(Format(message, row, column)), row_(row), column_(column) {}

  long row() const { return row_; }
  long column() const { return column_; }

 private:
  static std::string Format(const std::string& message, long row, long column) {
    std::string out = message;
    if (row >= 0) out += " (row " + std::to_string(row);
    if (column >= 0) out += (row >= 0 ? ", column " : " (column ") + std::to_string(column);
    if (row >= 0 || column >= 0) out += ")";
    return out;
  }

  long row_;
  long column_;
};

// Pipeline or sweep configuration is malformed or describes an illegal chain.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Operation requested from a function that does not provide it,
// e.g. soft prediction from a hard-only closed-form rule.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

}  // namespace synlabel

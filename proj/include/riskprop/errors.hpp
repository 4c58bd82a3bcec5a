#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace riskprop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid numeric input: non-positive mean, negative sd, bad counts, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed model text. Carries the 1-based line/column of the offence.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(message + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A structurally well-formed model that breaks a model invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message, std::string location = {})
      : Error(location.empty() ? message : message + " (at " + location + ")"),
        location_(std::move(location)) {}

  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

// Operation outside the supported model class (e.g. sums in log-normal mode).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace riskprop

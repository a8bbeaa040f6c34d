#pragma once

#include <stdexcept>
#include <string>

namespace divgauge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a generator, transform, or test function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Quadrature, inner optimization, or Monte Carlo failed to reach tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Training produced NaN evaluation objectives twice in a row.
class DivergedError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A ratio check whose denominator estimate is too close to zero.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace divgauge

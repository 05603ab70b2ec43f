#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dstofw {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A runtime invariant (feasibility, tracking identity) was breached.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite input, iteration cap hit.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dstofw

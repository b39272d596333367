#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hashrate {

// Root of every data or computation failure the library raises. Usage
// problems (bad flags) are handled by the CLI layer, not here.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// An estimator could not produce a value (no observations, infeasible
// moment equation, unreachable confidence level).
class EstimationError : public Error {
public:
  using Error::Error;
};

// Malformed input file; line() is 1-based, 0 when not line oriented.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

} // namespace hashrate

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace moralmt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Positioned DSL diagnostic. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column),
        bare_(message) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& bare_message() const noexcept { return bare_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string bare_;
};

// A relation was asked to judge inputs that do not satisfy its structural
// precondition. Indicates a mutation or harness bug, never an IRTC.
class PreconditionBreach : public Error {
 public:
  using Error::Error;
};

// Invalid scenario handed to the simulator, or a non-finite state.
class SimulationError : public Error {
 public:
  using Error::Error;
};

}  // namespace moralmt

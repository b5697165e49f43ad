#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cvrpdiff {

// Bad arguments or malformed data supplied by the caller.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Text input that could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Problem is too large for an exact method.
class SizeError : public InputError {
 public:
  using InputError::InputError;
};

// Some customer demand exceeds the vehicle capacity.
class InfeasibleInstance : public InputError {
 public:
  using InputError::InputError;
};

// Failures in model evaluation or training (non-finite loss, corrupt archive, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cvrpdiff

#pragma once

#include <stdexcept>
#include <string>

namespace ppf {

// Base class for every error raised by the library. The CLI maps each
// subclass to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files, malformed CSV or checkpoint archives.
class IoError : public Error {
 public:
  using Error::Error;
};

// Inputs that break a documented precondition (dimension mismatch, k too
// large, empty evaluation set, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared during optimization. Usually means the step
// size is too large for the data scale.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace ppf

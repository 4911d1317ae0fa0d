#pragma once

#include <stdexcept>
#include <string>

namespace pathflow {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

// State is outside D(A): head and tail left limit disagree, or the tail is not finite.
class DomainViolation : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

// Raised when a simulated path leaves the finite doubles.
class NonFinite : public Error {
 public:
  NonFinite(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pathflow

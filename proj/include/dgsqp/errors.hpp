#pragma once

#include <stdexcept>
#include <string>

namespace dgsqp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SymmetryError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// A rollout produced a non-finite state.
class RolloutDivergenceError : public Error {
 public:
  RolloutDivergenceError(int step, const std::string& what)
      : Error(what), step_(step) {}

  /// Index k of the first non-finite state x_k.
  int step() const { return step_; }

 private:
  int step_;
};

/// The Frenet map is singular (1 - kappa * e_y <= 0).
class DynamicsSingularityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dgsqp

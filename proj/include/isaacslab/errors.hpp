#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isaacslab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario file does not match the schema, or a coefficient violates a
/// structural rule (e.g. a control variable inside the diffusion).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// Raised when the explicit step violates the stability bound.
class StabilityError : public SolverError {
 public:
  StabilityError(const std::string& what, double dt, double dt_max)
      : SolverError(what), dt_(dt), dt_max_(dt_max) {}
  double dt() const { return dt_; }
  double dt_max() const { return dt_max_; }

 private:
  double dt_;
  double dt_max_;
};

class SimulationError : public Error {
 public:
  using Error::Error;
};

}  // namespace isaacslab

#pragma once

#include <stdexcept>
#include <string>

namespace oapf {

// Argument errors (bad dimensions, NaN input, invalid parameters) are reported
// with std::invalid_argument. The types below cover the failure modes that
// callers are expected to catch and handle differently.

/// All particles carry zero posterior density.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A linear-algebra step became too ill-conditioned to trust.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trajectory simulation produced a non-finite state.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, int timestep)
      : std::runtime_error(what), timestep_(timestep) {}

  int timestep() const noexcept { return timestep_; }

 private:
  int timestep_;
};

/// The requested operation needs a model kind it was not given.
class UnsupportedModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A proposal density vanishes where the target does not.
class SupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SummaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oapf

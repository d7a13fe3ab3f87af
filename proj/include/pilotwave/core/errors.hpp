#pragma once

#include <stdexcept>
#include <string>

namespace pilotwave {

/// Invalid grid, run configuration or cross-field mismatch.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Field is identically zero, so no phase or amplitude information exists.
class DegenerateFieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time stepper cannot advance: stability bound violated or singular solve.
class StepperError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values appeared while propagating.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long step, double time, const std::string& what)
      : std::runtime_error("numerical divergence at step " + std::to_string(step) +
                           " (t = " + std::to_string(time) + "): " + what),
        step_(step),
        time_(time) {}

  long step() const noexcept { return step_; }
  double time() const noexcept { return time_; }

 private:
  long step_;
  double time_;
};

/// Requested configuration is outside what an operation implements.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pilotwave

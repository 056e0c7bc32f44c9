#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fluidcc {

/// Input that violates a documented invariant (scenario fields, network shape, step size).
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
  ValidationError(const std::string& what, std::vector<std::string> details)
      : std::invalid_argument(what), details_(std::move(details)) {}

  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  std::vector<std::string> details_;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A state component became NaN or infinite during integration.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// An iterative solver ran out of iterations; carries the last iterate.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate, double residual)
      : NumericalError(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
};

/// Trajectory analysis window does not hold enough oscillation periods.
class WindowTooShortError : public NumericalError {
 public:
  explicit WindowTooShortError(const std::string& what) : NumericalError(what) {}
};

}  // namespace fluidcc

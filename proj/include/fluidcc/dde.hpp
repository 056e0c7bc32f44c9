#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fluidcc::dde {

using State = std::vector<double>;

/// Delayed states handed to a right-hand side, one per registered delay.
class DelayedStates {
 public:
  DelayedStates(std::size_t dimension, std::size_t n_delays) : dim_(dimension), data_(dimension * n_delays) {}

  /// State at t - delays[index].
  std::span<const double> operator[](std::size_t index) const { return {data_.data() + index * dim_, dim_}; }
  std::span<double> slot(std::size_t index) { return {data_.data() + index * dim_, dim_}; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }

 private:
  std::size_t dim_;
  std::vector<double> data_;
};

using RightHandSide =
    std::function<void(double t, std::span<const double> x, const DelayedStates& delayed, std::span<double> dx)>;

/// x'(t) = f(t, x(t), {x(t - d) : d in delays}).
struct DelayedSystem {
  std::size_t dimension = 0;
  std::vector<double> delays;  // constants >= 0, indexed by DelayedStates
  RightHandSide rhs;
  /// Components under the (b)^+_c rule: the derivative is zeroed when it is negative and the
  /// component is <= 0.
  std::vector<bool> projection_floor;
  std::vector<std::string> state_names;

  double max_delay() const;
  /// Evaluates rhs and applies the projection. `delayed` must already be filled.
  void derivative(double t, std::span<const double> x, const DelayedStates& delayed, std::span<double> dx) const;
};

/// Prehistory on [-max_delay, 0].
using InitialHistory = std::function<State(double t)>;

InitialHistory constant_history(State value);

/// Time-ordered samples with their derivatives, interpolated by cubic Hermite segments.
/// Queries before the first sample fall through to the initial history.
class HistoryBuffer {
 public:
  HistoryBuffer(std::size_t dimension, double max_delay, InitialHistory initial);

  /// Times must increase strictly.
  void push(double t, std::span<const double> x, std::span<const double> dx);
  void evaluate(double t, std::span<double> out) const;

  double front_time() const;
  double back_time() const;
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  struct Sample {
    double t;
    State x;
    State dx;
  };

  std::size_t dim_;
  double max_delay_;
  InitialHistory initial_;
  std::deque<Sample> samples_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> data;  // row-major, times.size() x dimension
  std::size_t dimension = 0;
  double dt = 0.0;
  std::size_t transient_end = 0;
  std::vector<std::string> state_names;

  std::size_t size() const noexcept { return times.size(); }
  std::span<const double> state(std::size_t k) const { return {data.data() + k * dimension, dimension}; }
  std::vector<double> component(std::size_t i) const;
  std::span<const double> back() const { return state(size() - 1); }
};

struct IntegrateOptions {
  double t_end = 0.0;
  double dt = 0.0;
  double transient_fraction = 0.5;
};

/// Fixed-step classical RK4. Requires dt <= (smallest positive delay) / 10 so every stage reads
/// the delayed state from already completed steps. Throws ValidationError for bad step settings
/// and DivergenceError on the first non-finite state.
Trajectory integrate(const DelayedSystem& system, const InitialHistory& initial_history,
                     const IntegrateOptions& options);

}  // namespace fluidcc::dde

#include "fluidcc/dde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fluidcc/errors.hpp"
#include "fluidcc/numfmt.hpp"

namespace fluidcc::dde {

double DelayedSystem::max_delay() const {
  double m = 0.0;
  for (double d : delays) m = std::max(m, d);
  return m;
}

void DelayedSystem::derivative(double t, std::span<const double> x, const DelayedStates& delayed,
                               std::span<double> dx) const {
  rhs(t, x, delayed, dx);
  for (std::size_t i = 0; i < projection_floor.size(); ++i)
    if (projection_floor[i] && dx[i] < 0.0 && x[i] <= 0.0) dx[i] = 0.0;
}

InitialHistory constant_history(State value) {
  return [value = std::move(value)](double) { return value; };
}

HistoryBuffer::HistoryBuffer(std::size_t dimension, double max_delay, InitialHistory initial)
    : dim_(dimension), max_delay_(max_delay), initial_(std::move(initial)) {}

void HistoryBuffer::push(double t, std::span<const double> x, std::span<const double> dx) {
  if (!samples_.empty() && !(t > samples_.back().t))
    throw std::logic_error("HistoryBuffer::push: times must increase");
  samples_.push_back({t, State(x.begin(), x.end()), State(dx.begin(), dx.end())});
  // Keep one sample at or before t - max_delay so the whole lookback window stays covered.
  const double horizon = t - max_delay_;
  while (samples_.size() >= 2 && samples_[1].t <= horizon) samples_.pop_front();
}

double HistoryBuffer::front_time() const { return samples_.empty() ? 0.0 : samples_.front().t; }
double HistoryBuffer::back_time() const { return samples_.empty() ? 0.0 : samples_.back().t; }

void HistoryBuffer::evaluate(double t, std::span<double> out) const {
  if (samples_.empty() || t < samples_.front().t) {
    if (!samples_.empty() && samples_.front().t > 0.0)
      throw std::logic_error("HistoryBuffer::evaluate: query precedes retained history");
    const State v = initial_(t);
    if (v.size() != dim_) throw ValidationError("initial history has wrong dimension");
    std::copy(v.begin(), v.end(), out.begin());
    return;
  }
  if (t > samples_.back().t) throw std::logic_error("HistoryBuffer::evaluate: query beyond latest sample");

  auto it = std::upper_bound(samples_.begin(), samples_.end(), t, [](double v, const Sample& s) { return v < s.t; });
  const Sample& a = *(it - 1);
  if (t == a.t || it == samples_.end()) {
    std::copy(a.x.begin(), a.x.end(), out.begin());
    return;
  }
  const Sample& b = *it;
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s2 * (3.0 - 2.0 * s);
  const double h11 = s2 * (s - 1.0);
  for (std::size_t i = 0; i < dim_; ++i)
    out[i] = h00 * a.x[i] + h10 * h * a.dx[i] + h01 * b.x[i] + h11 * h * b.dx[i];
}

std::vector<double> Trajectory::component(std::size_t i) const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = data[k * dimension + i];
  return out;
}

namespace {

void check_system(const DelayedSystem& system, const IntegrateOptions& options) {
  if (system.dimension == 0) throw ValidationError("delayed system needs dimension >= 1");
  if (!system.rhs) throw ValidationError("delayed system has no right-hand side");
  if (!system.projection_floor.empty() && system.projection_floor.size() != system.dimension)
    throw ValidationError("projection_floor size must match the dimension");
  if (!(options.dt > 0.0) || !std::isfinite(options.dt)) throw ValidationError("dt must be positive");
  if (!(options.t_end > 0.0) || !std::isfinite(options.t_end)) throw ValidationError("t_end must be positive");
  if (!(options.transient_fraction >= 0.0 && options.transient_fraction < 1.0))
    throw ValidationError("transient_fraction must lie in [0, 1)");
  double min_positive = std::numeric_limits<double>::infinity();
  for (double d : system.delays) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw ValidationError("delays must be finite and >= 0");
    if (d > 0.0) min_positive = std::min(min_positive, d);
  }
  if (std::isfinite(min_positive) && options.dt > min_positive / 10.0 * (1.0 + 1e-12))
    throw ValidationError("dt " + format_double(options.dt) + " exceeds smallest positive delay / 10 (" +
                          format_double(min_positive / 10.0) + ")");
}

}  // namespace

Trajectory integrate(const DelayedSystem& system, const InitialHistory& initial_history,
                     const IntegrateOptions& options) {
  check_system(system, options);
  if (!initial_history) throw ValidationError("initial history missing");

  const std::size_t n = system.dimension;
  const double dt = options.dt;
  const auto steps = static_cast<std::size_t>(std::llround(options.t_end / dt));
  if (steps == 0) throw ValidationError("t_end shorter than one step");

  HistoryBuffer history(n, system.max_delay(), initial_history);
  DelayedStates delayed(n, system.delays.size());

  auto eval = [&](double t, std::span<const double> x, std::span<double> dx) {
    for (std::size_t d = 0; d < system.delays.size(); ++d) {
      if (system.delays[d] == 0.0)
        std::copy(x.begin(), x.end(), delayed.slot(d).begin());
      else
        history.evaluate(t - system.delays[d], delayed.slot(d));
    }
    system.derivative(t, x, delayed, dx);
  };

  Trajectory traj;
  traj.dimension = n;
  traj.dt = dt;
  traj.state_names = system.state_names;
  if (traj.state_names.size() != n) {
    traj.state_names.clear();
    for (std::size_t i = 0; i < n; ++i) traj.state_names.push_back("x" + std::to_string(i));
  }
  traj.times.reserve(steps + 1);
  traj.data.reserve((steps + 1) * n);

  State x = initial_history(0.0);
  if (x.size() != n) throw ValidationError("initial history has wrong dimension");
  State k1(n), k2(n), k3(n), k4(n), stage(n);

  auto check_finite = [&](std::span<const double> v, double t) {
    for (double c : v)
      if (!std::isfinite(c)) throw DivergenceError("state became non-finite at t=" + format_double(t), t);
  };

  eval(0.0, x, k1);
  check_finite(k1, 0.0);
  history.push(0.0, x, k1);
  traj.times.push_back(0.0);
  traj.data.insert(traj.data.end(), x.begin(), x.end());

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t_half = t + 0.5 * dt;
    const double t_next = static_cast<double>(k + 1) * dt;

    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * dt * k1[i];
    eval(t_half, stage, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * dt * k2[i];
    eval(t_half, stage, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + dt * k3[i];
    eval(t_next, stage, k4);
    for (std::size_t i = 0; i < n; ++i) x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    // Hard floor contains roundoff below zero on projected components.
    for (std::size_t i = 0; i < system.projection_floor.size(); ++i)
      if (system.projection_floor[i] && x[i] < 0.0) x[i] = 0.0;
    check_finite(x, t_next);

    eval(t_next, x, k1);
    check_finite(k1, t_next);
    history.push(t_next, x, k1);
    traj.times.push_back(t_next);
    traj.data.insert(traj.data.end(), x.begin(), x.end());
  }
  traj.transient_end = static_cast<std::size_t>(options.transient_fraction * static_cast<double>(traj.size()));
  return traj;
}

}  // namespace fluidcc::dde

#include "fluidcc/limit_cycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fluidcc/errors.hpp"

namespace fluidcc::dde {

namespace {

double half_range(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return 0.5 * (*hi - *lo);
}

}  // namespace

LimitCycle analyze_oscillation(std::span<const double> series, double dt, const LimitCycleOptions& options) {
  const std::size_t n = series.size();
  const auto start = static_cast<std::size_t>(options.transient_fraction * static_cast<double>(n));
  if (start >= n || n - start < 8) throw WindowTooShortError("analysis window has fewer than 8 samples");
  const auto window = series.subspan(start);

  double mean = 0.0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(window.size());

  LimitCycle out;
  out.amplitude = half_range(window);
  double scale = options.reference_scale.value_or(std::abs(mean));
  if (!(scale > 0.0)) scale = 1.0;
  out.threshold = kQuiescenceFraction * scale;

  const std::size_t q = window.size() / 4;
  const double prev = half_range(window.subspan(2 * q, q));
  const double last = half_range(window.subspan(window.size() - q));
  if (prev > 0.0)
    out.growth = last / prev;
  else
    out.growth = last > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;

  if (out.amplitude < out.threshold) {
    out.quiescent = true;
    out.converged = true;
    return out;
  }

  std::vector<double> crossings;
  for (std::size_t k = 0; k + 1 < window.size(); ++k) {
    if (window[k] < mean && window[k + 1] >= mean) {
      const double frac = (mean - window[k]) / (window[k + 1] - window[k]);
      crossings.push_back((static_cast<double>(k) + frac) * dt);
    }
  }
  if (crossings.size() < options.min_periods + 1)
    throw WindowTooShortError("analysis window spans " + std::to_string(crossings.size() > 0 ? crossings.size() - 1 : 0) +
                              " periods, need " + std::to_string(options.min_periods));
  out.period = (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  out.converged = std::abs(last - prev) <= options.convergence_tolerance * prev;
  return out;
}

LimitCycle detect_limit_cycle(const Trajectory& trajectory, std::size_t component, const LimitCycleOptions& options) {
  if (component >= trajectory.dimension) throw std::out_of_range("detect_limit_cycle: component out of range");
  const auto series = trajectory.component(component);
  return analyze_oscillation(series, trajectory.dt, options);
}

}  // namespace fluidcc::dde

#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "fluidcc/dde.hpp"

namespace fluidcc::dde {

/// Amplitude below this fraction of the reference scale counts as converged to equilibrium.
inline constexpr double kQuiescenceFraction = 1e-4;

struct LimitCycleOptions {
  double transient_fraction = 0.5;
  /// Scale for the quiescence threshold (typically the equilibrium value). Defaults to the
  /// magnitude of the window mean, or 1 when that is zero.
  std::optional<double> reference_scale;
  std::size_t min_periods = 5;
  double convergence_tolerance = 0.02;
};

struct LimitCycle {
  double amplitude = 0.0;  // half peak-to-peak over the analysis window
  double period = 0.0;     // 0 when quiescent
  bool converged = false;
  bool quiescent = false;
  /// Last-quarter amplitude over the previous quarter; < 1 means the oscillation is dying out.
  double growth = 1.0;
  double threshold = 0.0;
};

LimitCycle analyze_oscillation(std::span<const double> series, double dt, const LimitCycleOptions& options = {});

LimitCycle detect_limit_cycle(const Trajectory& trajectory, std::size_t component,
                              const LimitCycleOptions& options = {});

}  // namespace fluidcc::dde

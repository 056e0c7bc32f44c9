#pragma once

#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "fluidcc/dde.hpp"
#include "fluidcc/errors.hpp"
#include "fluidcc/limit_cycle.hpp"
#include "fluidcc/models.hpp"

namespace fluidcc::stability {

/// a * tau threshold for x' = -a x(t - tau).
inline constexpr double kCriticalProduct = std::numbers::pi / 2.0;

/// Scalar delayed-feedback form x' = -coefficient * x(t - tau) about an equilibrium.
struct LinearizedGain {
  double coefficient = 0.0;
  double tau = 0.0;
  double product = 0.0;  // coefficient * tau
};

struct SimulatedCycle {
  double amplitude = 0.0;
  double period = 0.0;
  bool converged = false;
  bool quiescent = false;
};

struct StabilityReport {
  models::Equilibrium equilibrium;
  LinearizedGain gain;
  bool locally_stable = false;  // product < pi/2
  bool critical = false;        // product == pi/2; reported as not locally stable
  double margin = 0.0;          // pi/2 - product
  std::optional<SimulatedCycle> simulated;
};

/// Any dual variant: coefficient = kappa p*^m C / (alpha p*).
LinearizedGain linearize_dual(const models::DualModelParams& params);
/// coefficient = kappa C / alpha, product = kappa C tau / alpha. Requires m = 1.
LinearizedGain linearize_fair_dual(const models::DualModelParams& params);
/// About R* = C: coefficient = eta alpha / tau, product = eta alpha.
LinearizedGain linearize_rcp_single(const models::RcpSingleLinkParams& params);

/// Compares the product against pi/2. Equilibrium and simulation fields are left empty.
StabilityReport stability_margin(const LinearizedGain& gain);

// ---------------------------------------------------------------------------
// Bifurcation sweeps

/// One simulation of a parameterized model.
struct SweepInstance {
  dde::DelayedSystem system;
  dde::InitialHistory history;
  dde::IntegrateOptions integration;
  std::size_t component = 0;
  double equilibrium = 1.0;  // value of the observed component at equilibrium
};

using SweepFamily = std::function<SweepInstance(double parameter)>;

struct SweepSample {
  double parameter = 0.0;
  double amplitude = 0.0;
  double period = 0.0;
  double growth = 0.0;
  bool oscillating = false;
  bool converged = false;
};

struct SweepOptions {
  std::size_t samples = 13;
  double relative_width = 0.01;  // bisection stops when (hi - lo) <= width * midpoint
  bool parallel = true;
};

struct HopfSweepResult {
  double critical_value = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::vector<SweepSample> samples;      // the uniform grid, in parameter order
  std::vector<SweepSample> refinements;  // bisection points, in evaluation order
};

/// Sweep endpoints do not straddle the bifurcation.
class BracketError : public NumericalError {
 public:
  BracketError(const std::string& what, std::vector<SweepSample> samples)
      : NumericalError(what), samples_(std::move(samples)) {}
  const std::vector<SweepSample>& samples() const noexcept { return samples_; }

 private:
  std::vector<SweepSample> samples_;
};

/// Integrates one instance and classifies it. A sample oscillates when its post-transient
/// amplitude is above the quiescence threshold and is not dying out (growth >= 0.98).
SweepSample evaluate_sample(const SweepFamily& family, double parameter);

HopfSweepResult hopf_sweep(const SweepFamily& family, double lo, double hi, const SweepOptions& options = {});

struct FamilySettings {
  double dt_per_delay = 0.01;       // dt = tau * dt_per_delay
  double horizon_delays = 1000.0;   // t_end = tau * horizon_delays
  double perturbation = 0.01;       // relative offset of the constant history
  double transient_fraction = 0.5;
};

/// Fair dual with the gain kappa as parameter.
SweepFamily fair_dual_gain_family(models::DualModelParams base, FamilySettings settings = {});
/// Single-link RCP with eta as parameter.
SweepFamily rcp_single_eta_family(models::RcpSingleLinkParams base, FamilySettings settings = {});

struct CycleMeasurement {
  double parameter = 0.0;
  double amplitude = 0.0;  // of the chosen observable
  double period = 0.0;
  bool converged = false;
  std::size_t extensions = 0;  // horizon doublings needed to converge
};

enum class Observable {
  state,      // the component itself
  log_ratio,  // log(component / equilibrium)
};

/// Simulates at `parameter` and measures the limit cycle, doubling the horizon up to
/// `max_extensions` times until the amplitude settles.
CycleMeasurement measure_cycle(const SweepFamily& family, double parameter, Observable observable = Observable::state,
                               std::size_t max_extensions = 4);

struct SupercriticalPoint {
  double epsilon = 0.0;
  CycleMeasurement cycle;
};

/// Amplitudes at parameter (1 + eps) * critical for each eps.
std::vector<SupercriticalPoint> amplitude_vs_supercriticality(const SweepFamily& family, double critical,
                                                              std::span<const double> epsilons,
                                                              Observable observable = Observable::state);

struct AlphaAmplitudeRow {
  double alpha = 0.0;
  double critical_kappa = 0.0;
  double kappa = 0.0;
  double amplitude = 0.0;        // half peak-to-peak of log(p / p*)
  double price_amplitude = 0.0;  // half peak-to-peak of p
  double period = 0.0;
  bool converged = false;
};

struct AmplitudeTable {
  double epsilon = 0.0;
  std::vector<AlphaAmplitudeRow> rows;
  std::vector<double> ratios_to_first;    // amplitude[i] / amplitude[0]
  std::vector<double> successive_ratios;  // amplitude[i] / amplitude[i-1], i >= 1
};

/// For each alpha: locate the fair-dual critical gain with hopf_sweep over [0.8, 1.2] times the
/// linearized prediction, then measure the limit cycle at (1 + epsilon) times that gain.
AmplitudeTable amplitude_vs_alpha(const models::DualModelParams& base, std::span<const double> alphas, double epsilon,
                                  const SweepOptions& options = {}, FamilySettings settings = {});

}  // namespace fluidcc::stability

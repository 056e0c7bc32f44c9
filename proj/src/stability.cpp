#include "fluidcc/stability.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "fluidcc/numfmt.hpp"

namespace fluidcc::stability {

LinearizedGain linearize_dual(const models::DualModelParams& params) {
  const auto eq = models::dual_equilibrium(params);
  const double p_star = eq.state[0];
  // D'(p*) = -C / (alpha p*)
  const double slope = params.capacity / (params.fairness_alpha * p_star);
  const double scale = params.m == 1 ? params.kappa * p_star : params.kappa;
  LinearizedGain g;
  g.coefficient = scale * slope;
  g.tau = params.tau();
  g.product = g.coefficient * g.tau;
  return g;
}

LinearizedGain linearize_fair_dual(const models::DualModelParams& params) {
  if (params.m != 1) throw ValidationError("m: fair dual linearization requires m = 1");
  models::validate(params);
  LinearizedGain g;
  g.coefficient = params.kappa * params.capacity / params.fairness_alpha;
  g.tau = params.tau();
  g.product = g.coefficient * g.tau;
  return g;
}

LinearizedGain linearize_rcp_single(const models::RcpSingleLinkParams& params) {
  models::validate(params);
  LinearizedGain g;
  g.coefficient = params.eta * params.gain_alpha / params.tau;
  g.tau = params.tau;
  g.product = params.eta * params.gain_alpha;
  return g;
}

StabilityReport stability_margin(const LinearizedGain& gain) {
  StabilityReport report;
  report.gain = gain;
  report.margin = kCriticalProduct - gain.product;
  if (std::abs(report.margin) <= 1e-12 * kCriticalProduct) {
    report.margin = 0.0;
    report.critical = true;
  }
  report.locally_stable = report.margin > 0.0;
  return report;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> observe(const dde::Trajectory& traj, const SweepInstance& inst, Observable observable) {
  auto series = traj.component(inst.component);
  if (observable == Observable::log_ratio)
    for (double& v : series) v = std::log(v / inst.equilibrium);
  return series;
}

}  // namespace

SweepSample evaluate_sample(const SweepFamily& family, double parameter) {
  const SweepInstance inst = family(parameter);
  const auto traj = dde::integrate(inst.system, inst.history, inst.integration);
  dde::LimitCycleOptions opts;
  opts.transient_fraction = inst.integration.transient_fraction;
  opts.reference_scale = std::abs(inst.equilibrium);

  SweepSample s;
  s.parameter = parameter;
  try {
    const auto lc = dde::detect_limit_cycle(traj, inst.component, opts);
    s.amplitude = lc.amplitude;
    s.period = lc.period;
    s.growth = lc.growth;
    s.converged = lc.converged;
    s.oscillating = !lc.quiescent && lc.growth >= 0.98;
  } catch (const WindowTooShortError&) {
    // Non-oscillatory window: monotone decay is stable, anything else is not.
    const auto series = traj.component(inst.component);
    const auto window = std::span<const double>(series).subspan(traj.transient_end);
    const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
    s.amplitude = 0.5 * (*hi - *lo);
    const double start = std::abs(window.front() - inst.equilibrium);
    const double end = std::abs(window.back() - inst.equilibrium);
    s.growth = start > 0.0 ? end / start : 0.0;
    s.oscillating = s.growth >= 1.0;
    s.converged = false;
  }
  return s;
}

namespace {

std::vector<SweepSample> evaluate_all(const SweepFamily& family, const std::vector<double>& params, bool parallel) {
  std::vector<SweepSample> out(params.size());
  if (!parallel) {
    for (std::size_t i = 0; i < params.size(); ++i) out[i] = evaluate_sample(family, params[i]);
    return out;
  }
  std::vector<std::future<SweepSample>> jobs;
  jobs.reserve(params.size());
  for (double p : params) jobs.push_back(std::async(std::launch::async, [&family, p] { return evaluate_sample(family, p); }));
  for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i].get();
  return out;
}

}  // namespace

HopfSweepResult hopf_sweep(const SweepFamily& family, double lo, double hi, const SweepOptions& options) {
  if (options.samples < 8) throw ValidationError("hopf_sweep: need at least 8 samples");
  if (!(lo < hi)) throw ValidationError("hopf_sweep: range must satisfy lo < hi");
  if (!(options.relative_width > 0.0)) throw ValidationError("hopf_sweep: relative_width must be positive");

  std::vector<double> grid(options.samples);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);

  HopfSweepResult result;
  result.samples = evaluate_all(family, grid, options.parallel);
  const auto& s = result.samples;
  if (s.front().oscillating || !s.back().oscillating) {
    std::string what = "hopf_sweep: range [" + format_double(lo) + ", " + format_double(hi) + "] does not bracket a bifurcation (";
    what += s.front().oscillating ? "low end oscillates" : "high end is quiescent";
    throw BracketError(what + ")", s);
  }
  std::size_t first = 1;
  while (!s[first].oscillating) ++first;
  double a = s[first - 1].parameter, b = s[first].parameter;
  while (b - a > options.relative_width * 0.5 * (a + b)) {
    const double mid = 0.5 * (a + b);
    const auto sample = evaluate_sample(family, mid);
    result.refinements.push_back(sample);
    (sample.oscillating ? b : a) = mid;
  }
  result.bracket_lo = a;
  result.bracket_hi = b;
  result.critical_value = 0.5 * (a + b);
  return result;
}

SweepFamily fair_dual_gain_family(models::DualModelParams base, FamilySettings settings) {
  models::validate(base);
  if (base.m != 1) throw ValidationError("m: gain family is defined for the fair dual");
  if (!(base.tau() > 0.0)) throw ValidationError("tau: sweep needs a positive delay");
  return [base, settings](double kappa) {
    auto params = base;
    params.kappa = kappa;
    const double p_star = models::dual_equilibrium(params).state[0];
    SweepInstance inst;
    inst.system = models::fair_dual_rhs(params);
    inst.history = dde::constant_history({p_star * (1.0 + settings.perturbation)});
    inst.integration = {params.tau() * settings.horizon_delays, params.tau() * settings.dt_per_delay,
                        settings.transient_fraction};
    inst.equilibrium = p_star;
    return inst;
  };
}

SweepFamily rcp_single_eta_family(models::RcpSingleLinkParams base, FamilySettings settings) {
  models::validate(base);
  return [base, settings](double eta) {
    auto params = base;
    params.eta = eta;
    SweepInstance inst;
    inst.system = models::rcp_single_link_rhs(params);
    inst.history = dde::constant_history({params.capacity * (1.0 + settings.perturbation)});
    inst.integration = {params.tau * settings.horizon_delays, params.tau * settings.dt_per_delay,
                        settings.transient_fraction};
    inst.equilibrium = params.capacity;
    return inst;
  };
}

CycleMeasurement measure_cycle(const SweepFamily& family, double parameter, Observable observable,
                               std::size_t max_extensions) {
  SweepInstance inst = family(parameter);
  CycleMeasurement m;
  m.parameter = parameter;
  for (;; ++m.extensions) {
    const auto traj = dde::integrate(inst.system, inst.history, inst.integration);
    const auto series = observe(traj, inst, observable);
    dde::LimitCycleOptions opts;
    opts.transient_fraction = inst.integration.transient_fraction;
    opts.reference_scale = observable == Observable::log_ratio ? 1.0 : std::abs(inst.equilibrium);
    const auto lc = dde::analyze_oscillation(series, traj.dt, opts);
    m.amplitude = lc.amplitude;
    m.period = lc.period;
    m.converged = lc.converged;
    if (m.converged || m.extensions >= max_extensions) return m;
    inst.integration.t_end *= 2.0;
  }
}

std::vector<SupercriticalPoint> amplitude_vs_supercriticality(const SweepFamily& family, double critical,
                                                              std::span<const double> epsilons,
                                                              Observable observable) {
  std::vector<std::future<SupercriticalPoint>> jobs;
  for (double eps : epsilons)
    jobs.push_back(std::async(std::launch::async, [&family, critical, eps, observable] {
      return SupercriticalPoint{eps, measure_cycle(family, (1.0 + eps) * critical, observable)};
    }));
  std::vector<SupercriticalPoint> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

AmplitudeTable amplitude_vs_alpha(const models::DualModelParams& base, std::span<const double> alphas, double epsilon,
                                  const SweepOptions& options, FamilySettings settings) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon: supercriticality must be positive");
  if (alphas.empty()) throw ValidationError("alphas: need at least one value");

  AmplitudeTable table;
  table.epsilon = epsilon;
  for (double alpha : alphas) {
    auto params = base;
    params.m = 1;
    params.fairness_alpha = alpha;
    const auto family = fair_dual_gain_family(params, settings);
    // kappa C tau / alpha = pi/2
    const double predicted = kCriticalProduct * alpha / (params.capacity * params.tau());
    const auto sweep = hopf_sweep(family, 0.8 * predicted, 1.2 * predicted, options);

    AlphaAmplitudeRow row;
    row.alpha = alpha;
    row.critical_kappa = sweep.critical_value;
    row.kappa = (1.0 + epsilon) * sweep.critical_value;
    const auto log_cycle = measure_cycle(family, row.kappa, Observable::log_ratio);
    const auto price_cycle = measure_cycle(family, row.kappa, Observable::state);
    row.amplitude = log_cycle.amplitude;
    row.price_amplitude = price_cycle.amplitude;
    row.period = log_cycle.period;
    row.converged = log_cycle.converged && price_cycle.converged;
    table.rows.push_back(row);
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    table.ratios_to_first.push_back(table.rows[i].amplitude / table.rows[0].amplitude);
    if (i > 0) table.successive_ratios.push_back(table.rows[i].amplitude / table.rows[i - 1].amplitude);
  }
  return table;
}

}  // namespace fluidcc::stability

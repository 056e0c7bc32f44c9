// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fluidcc/dde.hpp"
#include "fluidcc/fairness.hpp"
#include "fluidcc/limit_cycle.hpp"
#include "fluidcc/models.hpp"
#include "fluidcc/runner.hpp"
#include "fluidcc/scenario.hpp"
#include "fluidcc/stability.hpp"
#include "fluidcc/topology.hpp"

using namespace fluidcc;
namespace fs = std::filesystem;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double min_over(const dde::Trajectory& t) { return *std::min_element(t.data.begin(), t.data.end()); }

NetworkDescription two_link_network() {
  NetworkDescription d;
  d.links = {{"L1", 1.0}, {"L2", 1.5}};
  d.routes = {{"A", {"L1"}, {}, {}, 0.05, 0.05}, {"B", {"L1", "L2"}, {}, {}, 0.1, 0.1}, {"C", {"L2"}, {}, {}, 0.05, 0.05}};
  for (auto& r : d.routes) fill_default_link_delays(r);
  return d;
}

// 1. Single-link RCP threshold.
Outcome rcp_threshold() {
  models::RcpSingleLinkParams base;
  base.capacity = 1.0;
  base.tau = 1.0;
  base.gain_alpha = 1.0;
  const auto family = stability::rcp_single_eta_family(base);
  const auto sweep = stability::hopf_sweep(family, 1.0, 2.2, {13, 0.01, true});
  const double err = rel(sweep.critical_value, kHalfPi);

  auto run_at = [&](double eta) {
    auto p = base;
    p.eta = eta;
    return dde::integrate(models::rcp_single_link_rhs(p), dde::constant_history({1.01 * p.capacity}), {1000.0, 0.01, 0.5});
  };
  const auto below = run_at(kHalfPi - 0.2);
  const double terminal = std::abs(below.back()[0] - base.capacity);
  const auto above = run_at(kHalfPi + 0.2);
  dde::LimitCycleOptions opts;
  opts.reference_scale = base.capacity;
  const auto cycle = dde::detect_limit_cycle(above, 0, opts);

  const bool pass = err < 0.03 && terminal < 1e-3 * base.capacity && cycle.amplitude > 1e-2 * base.capacity;
  return {pass, fmt("critical eta %.5f vs pi/2 (rel err %.3g%%); eta=pi/2-0.2 terminal |R-C| = %.2e; eta=pi/2+0.2 amplitude %.4f",
                    sweep.critical_value, 100 * err, terminal, cycle.amplitude)};
}

// 2. Fair-dual linearized threshold against the simulated bifurcation.
Outcome fair_dual_threshold() {
  struct Case {
    double c, tau, alpha;
  };
  bool pass = true;
  std::string detail;
  for (const Case k : {Case{1, 1, 1}, Case{2, 0.5, 2}}) {
    models::DualModelParams p;
    p.capacity = k.c;
    p.tau_f = k.tau / 2;
    p.tau_b = k.tau / 2;
    p.fairness_alpha = k.alpha;
    p.w = 1.0;
    const double predicted = kHalfPi * k.alpha / (k.c * k.tau);
    const auto sweep = stability::hopf_sweep(stability::fair_dual_gain_family(p), 0.7 * predicted, 1.3 * predicted, {13, 0.01, true});
    const double err = rel(sweep.critical_value, predicted);
    pass = pass && err < 0.03;
    detail += fmt("(C,tau,alpha)=(%g,%g,%g): kappa_c %.5f vs %.5f (rel err %.3g%%); ", k.c, k.tau, k.alpha,
                  sweep.critical_value, predicted, 100 * err);
  }
  return {pass, detail.substr(0, detail.size() - 2)};
}

// 3. Limit-cycle amplitude grows with alpha.
Outcome amplitude_vs_alpha() {
  models::DualModelParams p;
  p.capacity = 1.0;
  p.tau_f = 0.5;
  p.tau_b = 0.5;
  const std::vector<double> alphas = {1, 2, 4};
  const auto table = stability::amplitude_vs_alpha(p, alphas, 0.05);
  const double ratio = table.ratios_to_first[1];
  bool monotone = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) monotone = monotone && table.rows[i].amplitude > table.rows[i - 1].amplitude;
  bool converged = true;
  for (const auto& r : table.rows) converged = converged && r.converged;
  std::string detail = fmt("log(p/p*) amplitude ratio amp(2)/amp(1) = %.4f, monotone over {1,2,4}: %s; amplitudes", ratio,
                           monotone ? "yes" : "no");
  for (const auto& r : table.rows) detail += fmt(" %.4g", r.amplitude);
  detail += fmt("; raw price amplitude ratio %.4f", table.rows[1].price_amplitude / table.rows[0].price_amplitude);
  return {ratio >= 1.4 && ratio <= 2.6 && monotone && converged, detail};
}

// 4. Amplitude grows like sqrt(epsilon) just past the bifurcation.
Outcome hopf_signature() {
  models::RcpSingleLinkParams base;
  const auto family = stability::rcp_single_eta_family(base);
  const std::vector<double> eps = {0.02, 0.04, 0.08};
  const auto pts = stability::amplitude_vs_supercriticality(family, kHalfPi / base.gain_alpha, eps);
  bool pass = true;
  std::string detail = "amplitudes";
  for (const auto& p : pts) {
    detail += fmt(" %.4f", p.cycle.amplitude);
    pass = pass && p.cycle.converged;
  }
  detail += "; successive ratios";
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double r = pts[i].cycle.amplitude / pts[i - 1].cycle.amplitude;
    detail += fmt(" %.4f", r);
    pass = pass && r >= 1.19 && r <= 1.64;
  }
  return {pass, detail + fmt(" (sqrt 2 = %.4f)", std::sqrt(2.0))};
}

// 5. alpha = 64 approaches max-min; proportional fairness inequality at alpha = 1.
Outcome fairness_consistency() {
  const Network net(two_link_network());
  const auto mm = fairness::maxmin_allocate(net);
  const auto a64 = fairness::alpha_fair_allocate(net, fairness::FairnessParams::uniform(net, fairness::FairnessAlpha(64.0)));
  double linf = 0.0;
  for (std::size_t r = 0; r < mm.rates.size(); ++r) linf = std::max(linf, std::abs(mm.rates[r] - a64.rates[r]));

  const auto pf = fairness::alpha_fair_allocate(net, fairness::FairnessParams::uniform(net, fairness::FairnessAlpha(1.0)));
  std::mt19937_64 rng(20241016);
  std::uniform_real_distribution<double> u(1e-3, 1.0);
  std::vector<std::vector<double>> candidates;
  double worst = -std::numeric_limits<double>::infinity();
  while (candidates.size() < 1000) {
    std::vector<double> x(net.routes().size());
    for (auto& v : x) v = u(rng) * 1.5;
    const auto loads = fairness::link_loads(net, x);
    double scale = 1.0;
    for (std::size_t l = 0; l < loads.size(); ++l) scale = std::min(scale, net.links()[l].capacity / loads[l]);
    for (auto& v : x) v *= scale * u(rng);  // feasible, often strictly inside
    worst = std::max(worst, fairness::aggregate_proportional_change(pf.rates, x));
    candidates.push_back(std::move(x));
  }
  const bool pf_ok = fairness::check_proportional_fairness(pf, candidates);
  return {linf < 1e-2 && pf_ok,
          fmt("L-inf(alpha=64, max-min) = %.3e; alpha=1 rates (%.6f, %.6f, %.6f), max aggregate proportional change over 1000 "
              "feasible candidates = %.3e",
              linf, pf.rates[0], pf.rates[1], pf.rates[2], worst)};
}

// 6. TCP steady state x tau sqrt(p) = sqrt(2).
Outcome tcp_equilibrium() {
  bool pass = true;
  std::string detail;
  for (const auto [tau, p] : {std::pair{1.0, 0.08}, std::pair{0.5, 0.02}}) {
    models::TcpParams tcp;
    tcp.rtt = tau;
    tcp.loss = models::LossModel::constant(p);
    const double w0 = 0.5 * std::sqrt(2.0 / p);
    const auto traj = dde::integrate(models::tcp_rhs(tcp), dde::constant_history({w0}), {400.0 * tau, tau / 100, 0.5});
    const double x = traj.back()[0] / tau;
    const double product = x * tau * std::sqrt(p);
    const double fair_form = 1.0 / (tau * std::sqrt(p));
    const double err = rel(product, std::sqrt(2.0));
    pass = pass && err < 1e-3;
    detail += fmt("(tau,p)=(%g,%g): x*=%.6f, x tau sqrt(p)=%.7f (rel err %.1e), x*/(1/(tau sqrt p))=%.6f; ", tau, p, x, product,
                  err, x / fair_form);
  }
  return {pass, detail + "the 1/(tau sqrt p) form differs by the constant factor sqrt 2"};
}

// 7. Fourth-order convergence on x' = -x.
Outcome integrator_order() {
  dde::DelayedSystem sys;
  sys.dimension = 1;
  sys.rhs = [](double, std::span<const double> x, const dde::DelayedStates&, std::span<double> dx) { dx[0] = -x[0]; };
  std::vector<double> errors;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    const auto traj = dde::integrate(sys, dde::constant_history({1.0}), {1.0, dt, 0.5});
    errors.push_back(std::abs(traj.back()[0] - std::exp(-1.0)));
  }
  const double r1 = errors[0] / errors[1], r2 = errors[1] / errors[2];
  return {r1 >= 12 && r2 >= 12,
          fmt("errors %.3e %.3e %.3e; reduction factors %.2f %.2f", errors[0], errors[1], errors[2], r1, r2)};
}

// 8. No negative state in RCP or dual simulations from nonnegative histories. Runs the explicit
// scheme cannot integrate (non-finite values) abort before emitting any state and are listed.
Outcome projection_safety() {
  double worst = std::numeric_limits<double>::infinity();
  std::size_t completed = 0, floor_hits = 0;
  std::vector<std::string> aborted;
  auto track = [&](const std::string& label, const std::function<dde::Trajectory()>& sim) {
    try {
      const auto t = sim();
      worst = std::min(worst, min_over(t));
      floor_hits += static_cast<std::size_t>(std::count(t.data.begin(), t.data.end(), 0.0));
      ++completed;
    } catch (const DivergenceError&) {
      aborted.push_back(label);
    }
  };
  for (double eta : {0.5, 1.5, 2.5, 4.0}) {
    models::RcpSingleLinkParams p;
    p.eta = eta;
    for (double h : {0.0, 0.1, 1.0, 3.0})
      track("rcp-single", [&] { return dde::integrate(models::rcp_single_link_rhs(p), dde::constant_history({h}), {100, 0.01, 0.5}); });
  }
  for (int m : {0, 1})
    for (double kappa : {0.5, 2.0, 6.0})
      for (double h : {0.0, 0.2, 5.0}) {
        models::DualModelParams p;
        p.m = m;
        p.kappa = kappa;
        track(fmt("dual m=%d kappa=%g p0=%g", m, kappa, h),
              [&] { return dde::integrate(models::dual_rhs(p), dde::constant_history({h}), {100, 0.01, 0.5}); });
      }
  const Network net(two_link_network());
  for (auto queue : {models::QueueModel::integrating, models::QueueModel::small_buffer})
    for (double gain : {0.1, 1.0, 3.0}) {
      models::RcpParams p;
      p.links.assign(2, {gain, 0.2, 0.15});
      p.queue = queue;
      const auto sys = models::rcp_rhs(net, p);
      for (double h : {0.01, 1.0, 4.0})
        track(fmt("rcp %s gain=%g R0=%g", queue == models::QueueModel::integrating ? "integrating" : "small-buffer", gain, h),
              [&] { return dde::integrate(sys, dde::constant_history(dde::State(sys.dimension, h)), {60, 0.002, 0.5}); });
    }
  std::string detail = fmt("%zu simulations completed, minimum state %.3g, %zu samples held at the zero floor", completed, worst, floor_hits);
  if (!aborted.empty()) {
    detail += fmt("; %zu aborted on non-finite values before emitting any state:", aborted.size());
    for (const auto& a : aborted) detail += " [" + a + "]";
  }
  return {worst >= 0.0 && completed > 0, detail};
}

// 9. Small-gain multi-link RCP converges to one equilibrium from different histories.
Outcome small_gain() {
  const Network net(two_link_network());
  models::RcpParams p;
  p.links.assign(2, {0.1, 0.0, 0.15});
  const auto sys = models::rcp_rhs(net, p);
  const auto eq = models::rcp_equilibrium(net, p);
  const std::vector<dde::State> histories = {{0.2, 0.3, 0, 0}, {2.0, 3.0, 0, 0}, {0.05, 4.0, 0, 0}};
  std::vector<dde::State> finals;
  for (const auto& h : histories) {
    const auto traj = dde::integrate(sys, dde::constant_history(h), {400.0, 0.002, 0.5});
    finals.emplace_back(traj.back().begin(), traj.back().end());
  }
  double spread = 0.0, to_eq = 0.0;
  for (const auto& f : finals)
    for (std::size_t l = 0; l < 2; ++l) {
      spread = std::max(spread, std::abs(f[l] - finals[0][l]));
      to_eq = std::max(to_eq, std::abs(f[l] - eq.state[l]));
    }
  return {spread < 1e-4 && to_eq < 1e-4,
          fmt("final link rates (%.6f, %.6f), (%.6f, %.6f), (%.6f, %.6f); max spread %.2e; max distance to R* = (%.6f, %.6f) %.2e",
              finals[0][0], finals[0][1], finals[1][0], finals[1][1], finals[2][0], finals[2][1], spread, eq.state[0], eq.state[1], to_eq)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 10. Byte-identical CSV artifacts across runs of every bundled scenario.
Outcome determinism() {
  std::size_t compared = 0;
  std::vector<std::string> mismatched;
  const auto root = fs::temp_directory_path() / "fluidcc_acceptance_determinism";
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(FLUIDCC_TEST_DATA))
    if (e.path().extension() == ".yaml" && !e.path().filename().string().starts_with("invalid")) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    const auto scenario = cli::load_scenario(file);
    const auto command = scenario.experiment.kind == cli::ExperimentSpec::Kind::none ? cli::Command::simulate : cli::Command::sweep;
    std::vector<std::string> bodies;
    for (int run = 0; run < 2; ++run) {
      const auto dir = root / file.stem() / std::to_string(run);
      fs::remove_all(dir);
      cli::RunSummary summary;
      try {
        summary = cli::run(scenario, command, {dir, cli::OutputFormat::csv});
      } catch (const NumericalError&) {
      }
      std::string all;
      for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") all += e.path().filename().string() + "\n" + slurp(e.path());
      bodies.push_back(all);
    }
    ++compared;
    if (bodies[0].empty() || bodies[0] != bodies[1]) mismatched.push_back(file.filename().string());
  }
  std::string detail = fmt("%zu scenarios run twice", compared);
  if (!mismatched.empty()) {
    detail += "; differing:";
    for (const auto& m : mismatched) detail += " " + m;
  }
  return {mismatched.empty() && compared > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "RCP threshold reproduction", rcp_threshold},
      {2, "fair-dual threshold", fair_dual_threshold},
      {3, "amplitude versus alpha", amplitude_vs_alpha},
      {4, "Hopf square-root signature", hopf_signature},
      {5, "fairness consistency", fairness_consistency},
      {6, "TCP equilibrium algebra", tcp_equilibrium},
      {7, "integrator order", integrator_order},
      {8, "projection safety", projection_safety},
      {9, "small-gain multi-link RCP", small_gain},
      {10, "determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

#include "fluidcc/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fluidcc/fairness.hpp"
#include "fluidcc/limit_cycle.hpp"
#include "fluidcc/numfmt.hpp"
#include "fluidcc/stability.hpp"

namespace fluidcc::cli {

using nlohmann::json;

std::string to_string(Command command) {
  switch (command) {
    case Command::simulate: return "simulate";
    case Command::allocate: return "allocate";
    case Command::stability: return "stability";
    case Command::sweep: return "sweep";
  }
  return "unknown";
}

std::filesystem::path resolve_output_dir(const std::optional<std::string>& cli_out, const Scenario& scenario) {
  if (cli_out && !cli_out->empty()) return *cli_out;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  if (!scenario.output.dir.empty()) return scenario.output.dir;
  return ".";
}

json RunSummary::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["scenario_digest"] = scenario_digest;
  j["scenario_name"] = scenario_name;
  j["command"] = command;
  j["wall_time"] = wall_time;
  j["results"] = results;
  j["artifacts"] = artifacts;
  j["error"] = error ? json(*error) : json(nullptr);
  return j;
}

models::Equilibrium scenario_equilibrium(const Scenario& scenario) {
  switch (scenario.model.kind) {
    case ModelKind::dual:
    case ModelKind::fair_dual: return models::dual_equilibrium(scenario.dual());
    case ModelKind::rcp: return models::rcp_equilibrium(scenario_network(scenario), scenario.rcp());
    case ModelKind::rcp_single: return models::rcp_single_link_equilibrium(scenario.rcp_single());
    case ModelKind::tcp: return models::tcp_equilibrium(scenario.tcp());
  }
  throw std::logic_error("unreachable");
}

dde::State initial_state(const Scenario& scenario) {
  const auto& init = scenario.integration.initial;
  if (init.kind == InitialSpec::Kind::constant) return init.state;
  auto state = scenario_equilibrium(scenario).state;
  for (double& v : state) v *= 1.0 + init.offset;
  return state;
}

dde::Trajectory simulate_scenario(const Scenario& scenario) {
  const auto system = scenario_system(scenario);
  const auto& in = scenario.integration;
  return dde::integrate(system, dde::constant_history(initial_state(scenario)), {in.t_end, in.dt, in.transient_fraction});
}

std::string trajectory_csv(const dde::Trajectory& trajectory) {
  std::string out = "t";
  for (const auto& name : trajectory.state_names) out += "," + name;
  out += "\n";
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    out += format_double(trajectory.times[k]);
    for (double v : trajectory.state(k)) out += "," + format_double(v);
    out += "\n";
  }
  return out;
}

namespace {

bool wants_csv(OutputFormat f) { return f != OutputFormat::json; }
bool wants_json(OutputFormat f) { return f != OutputFormat::csv; }

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

json named_values(const std::vector<std::string>& names, std::span<const double> values) {
  json j = json::object();
  for (std::size_t i = 0; i < names.size() && i < values.size(); ++i) j[names[i]] = values[i];
  return j;
}

json cycle_json(const dde::Trajectory& traj, std::size_t component, std::optional<double> reference) {
  dde::LimitCycleOptions opts;
  opts.transient_fraction = traj.size() ? static_cast<double>(traj.transient_end) / static_cast<double>(traj.size()) : 0.5;
  if (reference && *reference > 0.0) opts.reference_scale = *reference;
  json j;
  try {
    const auto c = dde::detect_limit_cycle(traj, component, opts);
    j["amplitude"] = c.amplitude;
    j["period"] = c.period;
    j["converged"] = c.converged;
    j["quiescent"] = c.quiescent;
    j["growth"] = c.growth;
    j["threshold"] = c.threshold;
  } catch (const WindowTooShortError& e) {
    const auto series = traj.component(component);
    const auto [lo, hi] = std::minmax_element(series.begin() + static_cast<std::ptrdiff_t>(traj.transient_end), series.end());
    j["amplitude"] = lo == series.end() ? 0.0 : (*hi - *lo) / 2.0;
    j["period"] = nullptr;
    j["converged"] = false;
    j["quiescent"] = false;
    j["note"] = e.what();
  }
  return j;
}

json trajectory_results(const Scenario& scenario, const dde::Trajectory& traj, const std::optional<models::Equilibrium>& eq) {
  json r;
  r["model"] = to_string(scenario.model.kind);
  r["dimension"] = traj.dimension;
  r["steps"] = traj.size() ? traj.size() - 1 : 0;
  r["dt"] = traj.dt;
  r["t_end"] = traj.size() ? traj.times.back() : 0.0;
  r["equilibrium"] = eq ? named_values(traj.state_names, eq->state) : json(nullptr);
  r["final"] = named_values(traj.state_names, traj.back());
  std::vector<double> mins(traj.dimension, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < traj.size(); ++k)
    for (std::size_t i = 0; i < traj.dimension; ++i) mins[i] = std::min(mins[i], traj.state(k)[i]);
  r["minimum"] = named_values(traj.state_names, mins);
  json cycles = json::object();
  for (std::size_t i = 0; i < traj.dimension; ++i) {
    std::optional<double> ref;
    if (eq && i < eq->state.size()) ref = eq->state[i];
    cycles[traj.state_names[i]] = cycle_json(traj, i, ref);
  }
  r["oscillation"] = cycles;

  if (scenario.model.kind == ModelKind::tcp) {
    // Post-transient means of window, rate and loss; x * rtt * sqrt(p) is sqrt(2) at equilibrium.
    const auto& p = scenario.tcp();
    double w = 0.0;
    std::size_t n = 0;
    for (std::size_t k = traj.transient_end; k < traj.size(); ++k, ++n) w += traj.state(k)[0];
    w /= static_cast<double>(std::max<std::size_t>(n, 1));
    const double x = w / p.rtt;
    const double loss = p.loss(p.n_flows * x);
    r["tcp"] = {{"mean_window", w}, {"mean_rate", x}, {"loss", loss}, {"rate_rtt_sqrt_loss", x * p.rtt * std::sqrt(loss)}};
  }
  return r;
}

std::optional<models::Equilibrium> try_equilibrium(const Scenario& scenario, json& notes) {
  try {
    return scenario_equilibrium(scenario);
  } catch (const ConvergenceError& e) {
    notes.push_back(std::string("equilibrium: ") + e.what());
    return std::nullopt;
  }
}

struct Context {
  const Scenario& scenario;
  const RunOptions& options;
  RunSummary& summary;

  void emit(const std::string& name, const std::string& body) {
    write_file(options.out_dir / name, body);
    summary.artifacts.push_back(name);
  }
};

void run_simulate(Context& ctx) {
  json notes = json::array();
  std::optional<models::Equilibrium> eq = try_equilibrium(ctx.scenario, notes);
  const auto traj = simulate_scenario(ctx.scenario);
  ctx.summary.results = trajectory_results(ctx.scenario, traj, eq);
  if (!notes.empty()) ctx.summary.results["notes"] = notes;
  if (wants_csv(ctx.options.format)) ctx.emit("trajectory.csv", trajectory_csv(traj));
}

void run_allocate(Context& ctx) {
  const auto network = scenario_network(ctx.scenario);
  const auto& spec = ctx.scenario.fairness;
  fairness::FairnessParams params;
  if (spec.tcp_fair) {
    params = fairness::FairnessParams::tcp_fair(network);
  } else {
    params = fairness::FairnessParams::uniform(network, spec.alpha);
    for (std::size_t r = 0; r < network.routes().size(); ++r)
      if (auto it = spec.weights.find(network.routes()[r].id); it != spec.weights.end()) params.willingness_to_pay[r] = it->second;
  }
  const auto a = fairness::allocate(network, params);
  const auto loads = fairness::link_loads(network, a.rates);

  json routes = json::array();
  std::string csv = "route,rate,weight,bottlenecks\n";
  for (std::size_t r = 0; r < network.routes().size(); ++r) {
    const auto& id = network.routes()[r].id;
    routes.push_back({{"id", id}, {"rate", a.rates[r]}, {"weight", params.willingness_to_pay[r]}, {"bottlenecks", a.bottlenecks[r]}});
    std::string b;
    for (std::size_t i = 0; i < a.bottlenecks[r].size(); ++i) b += (i ? ";" : "") + a.bottlenecks[r][i];
    csv += id + "," + format_double(a.rates[r]) + "," + format_double(params.willingness_to_pay[r]) + "," + b + "\n";
  }
  json links = json::array();
  for (std::size_t l = 0; l < network.links().size(); ++l) {
    json lj = {{"id", network.links()[l].id}, {"capacity", network.links()[l].capacity}, {"load", loads[l]}};
    lj["price"] = a.link_prices.empty() ? json(nullptr) : json(a.link_prices[l]);
    links.push_back(lj);
  }
  ctx.summary.results = {{"alpha", params.alpha.to_string()},
                         {"routes", routes},
                         {"links", links},
                         {"kkt_residual", a.kkt_residual},
                         {"iterations", a.iterations}};
  if (wants_csv(ctx.options.format)) ctx.emit("allocation.csv", csv);
}

std::optional<stability::LinearizedGain> scenario_gain(const Scenario& s) {
  switch (s.model.kind) {
    case ModelKind::dual:
    case ModelKind::fair_dual: return stability::linearize_dual(s.dual());
    case ModelKind::rcp_single: return stability::linearize_rcp_single(s.rcp_single());
    default: return std::nullopt;
  }
}

void run_stability(Context& ctx) {
  json notes = json::array();
  const auto eq = try_equilibrium(ctx.scenario, notes);
  const auto traj = simulate_scenario(ctx.scenario);
  auto r = trajectory_results(ctx.scenario, traj, eq);

  const json sim = r["oscillation"][traj.state_names[0]];
  const bool sim_quiescent = sim.value("quiescent", false);
  const bool sim_decaying = sim.contains("growth") && sim["growth"].get<double>() < 0.98;
  const bool sim_stable = sim_quiescent || sim_decaying;
  r["simulated_stable"] = sim_stable;

  if (const auto gain = scenario_gain(ctx.scenario)) {
    const auto rep = stability::stability_margin(*gain);
    r["linearization"] = {{"coefficient", gain->coefficient},
                          {"tau", gain->tau},
                          {"product", gain->product},
                          {"critical_product", stability::kCriticalProduct},
                          {"margin", rep.margin}};
    r["locally_stable"] = rep.locally_stable;
    r["critical"] = rep.critical;
    r["verdict"] = rep.critical ? "critical" : rep.locally_stable ? "stable" : "unstable";
    r["verdict_source"] = "linearization";
    r["simulation_agrees"] = rep.critical || rep.locally_stable == sim_stable;
  } else {
    r["linearization"] = nullptr;
    r["locally_stable"] = sim_stable;
    r["critical"] = false;
    r["verdict"] = sim_stable ? "stable" : "unstable";
    r["verdict_source"] = "simulation";
  }
  if (!notes.empty()) r["notes"] = notes;
  ctx.summary.results = r;
  if (wants_csv(ctx.options.format)) ctx.emit("trajectory.csv", trajectory_csv(traj));
}

stability::FamilySettings family_settings(const Scenario& s, double tau) {
  stability::FamilySettings f;
  f.dt_per_delay = s.integration.dt / tau;
  f.horizon_delays = s.experiment.horizon_delays;
  f.transient_fraction = s.integration.transient_fraction;
  if (s.integration.initial.kind == InitialSpec::Kind::equilibrium_offset) f.perturbation = s.integration.initial.offset;
  return f;
}

std::string sample_rows(const std::vector<stability::SweepSample>& samples, const char* kind) {
  std::string out;
  for (const auto& x : samples)
    out += std::string(kind) + "," + format_double(x.parameter) + "," + format_double(x.amplitude) + "," +
           format_double(x.period) + "," + format_double(x.growth) + "," + (x.oscillating ? "oscillating" : "stable") + "," +
           (x.converged ? "1" : "0") + "\n";
  return out;
}

json samples_json(const std::vector<stability::SweepSample>& samples) {
  json a = json::array();
  for (const auto& x : samples)
    a.push_back({{"parameter", x.parameter},
                 {"amplitude", x.amplitude},
                 {"period", x.period},
                 {"growth", x.growth},
                 {"oscillating", x.oscillating},
                 {"converged", x.converged}});
  return a;
}

constexpr const char* kSweepHeader = "kind,parameter,amplitude,period,growth,verdict,converged\n";

void run_hopf_sweep(Context& ctx) {
  const auto& s = ctx.scenario;
  const auto& e = s.experiment;
  stability::SweepFamily family;
  double predicted = 0.0;
  if (s.model.kind == ModelKind::fair_dual) {
    const auto& p = s.dual();
    family = stability::fair_dual_gain_family(p, family_settings(s, p.tau()));
    predicted = stability::kCriticalProduct * p.fairness_alpha / (p.capacity * p.tau());
  } else {
    const auto& p = s.rcp_single();
    family = stability::rcp_single_eta_family(p, family_settings(s, p.tau));
    predicted = stability::kCriticalProduct / p.gain_alpha;
  }
  stability::SweepOptions opts;
  opts.samples = e.samples;
  opts.relative_width = e.relative_width;

  json r = {{"experiment", "hopf-sweep"}, {"parameter", e.parameter}, {"range", {e.lo, e.hi}}, {"predicted_critical", predicted}};
  try {
    const auto res = stability::hopf_sweep(family, e.lo, e.hi, opts);
    r["critical_value"] = res.critical_value;
    r["bracket"] = {res.bracket_lo, res.bracket_hi};
    r["relative_error"] = std::abs(res.critical_value - predicted) / predicted;
    r["samples"] = samples_json(res.samples);
    r["refinements"] = samples_json(res.refinements);
    ctx.summary.results = r;
    if (wants_csv(ctx.options.format))
      ctx.emit("sweep.csv", kSweepHeader + sample_rows(res.samples, "grid") + sample_rows(res.refinements, "refine"));
  } catch (const stability::BracketError& err) {
    r["samples"] = samples_json(err.samples());
    ctx.summary.results = r;
    if (wants_csv(ctx.options.format)) ctx.emit("sweep.csv", kSweepHeader + sample_rows(err.samples(), "grid"));
    throw;
  }
}

void run_amplitude_vs_alpha(Context& ctx) {
  const auto& s = ctx.scenario;
  const auto& e = s.experiment;
  const auto& p = s.dual();
  const auto table = stability::amplitude_vs_alpha(p, e.alphas, e.epsilon, {}, family_settings(s, p.tau()));
  json rows = json::array();
  std::string csv = "alpha,critical_kappa,kappa,log_amplitude,price_amplitude,period,converged\n";
  for (const auto& row : table.rows) {
    rows.push_back({{"alpha", row.alpha},
                    {"critical_kappa", row.critical_kappa},
                    {"kappa", row.kappa},
                    {"log_amplitude", row.amplitude},
                    {"price_amplitude", row.price_amplitude},
                    {"period", row.period},
                    {"converged", row.converged}});
    csv += format_double(row.alpha) + "," + format_double(row.critical_kappa) + "," + format_double(row.kappa) + "," +
           format_double(row.amplitude) + "," + format_double(row.price_amplitude) + "," + format_double(row.period) + "," +
           (row.converged ? "1" : "0") + "\n";
  }
  ctx.summary.results = {{"experiment", "amplitude-vs-alpha"},
                         {"epsilon", table.epsilon},
                         {"rows", rows},
                         {"ratios_to_first", table.ratios_to_first},
                         {"successive_ratios", table.successive_ratios}};
  if (wants_csv(ctx.options.format)) ctx.emit("amplitude.csv", csv);
}

void run_sweep(Context& ctx) {
  switch (ctx.scenario.experiment.kind) {
    case ExperimentSpec::Kind::none:
      throw ScenarioError("field 'experiment.type': the sweep command needs 'hopf-sweep' or 'amplitude-vs-alpha'");
    case ExperimentSpec::Kind::hopf_sweep: run_hopf_sweep(ctx); break;
    case ExperimentSpec::Kind::amplitude_vs_alpha: run_amplitude_vs_alpha(ctx); break;
  }
}

}  // namespace

RunSummary run(const Scenario& scenario, Command command, const RunOptions& options) {
  RunSummary summary;
  summary.scenario_digest = scenario_digest(scenario);
  summary.scenario_name = scenario.name;
  summary.command = to_string(command);
  std::filesystem::create_directories(options.out_dir);
  Context ctx{scenario, options, summary};
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (wants_json(options.format)) {
      summary.artifacts.push_back("summary.json");
      write_file(options.out_dir / "summary.json", summary.to_json().dump(2) + "\n");
    }
  };
  try {
    switch (command) {
      case Command::simulate: run_simulate(ctx); break;
      case Command::allocate: run_allocate(ctx); break;
      case Command::stability: run_stability(ctx); break;
      case Command::sweep: run_sweep(ctx); break;
    }
  } catch (const NumericalError& e) {
    summary.error = e.what();
    finish();
    throw;
  }
  finish();
  return summary;
}

}  // namespace fluidcc::cli

#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "doctest.h"
#include "fluidcc/runner.hpp"
#include "fluidcc/stability.hpp"

using namespace fluidcc;
using namespace fluidcc::cli;
namespace fs = std::filesystem;

namespace {

const std::string kData = FLUIDCC_TEST_DATA;
constexpr double kHalfPi = std::numbers::pi / 2;

Scenario data(const std::string& name) { return load_scenario(kData + "/" + name); }

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fluidcc_runner_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

}  // namespace

TEST_CASE("stability on the unit fair dual reports p* = 1 and a stable verdict") {
  const auto dir = fresh_dir("fair_dual");
  const auto summary = run(data("fair_dual_single.yaml"), Command::stability, {dir, OutputFormat::both});
  const auto& r = summary.results;
  CHECK(r["equilibrium"]["p"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r["locally_stable"].get<bool>());
  CHECK(r["verdict"] == "stable");
  CHECK(r["linearization"]["product"].get<double>() == doctest::Approx(1.0));
  CHECK(r["simulation_agrees"].get<bool>());
  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(fs::exists(dir / "summary.json"));
  const auto json = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(json["schema_version"] == kSchemaVersion);
  CHECK(json["command"] == "stability");
  CHECK(json["scenario_digest"] == summary.scenario_digest);
  CHECK(json["error"].is_null());
}

TEST_CASE("rcp-single above the threshold settles on a limit cycle") {
  const auto summary = run(data("rcp_single_unstable.yaml"), Command::stability, {fresh_dir("rcp_single"), OutputFormat::json});
  const auto& r = summary.results;
  CHECK(r["verdict"] == "unstable");
  CHECK_FALSE(r["locally_stable"].get<bool>());
  const auto& cycle = r["oscillation"]["R"];
  CHECK(cycle["amplitude"].get<double>() > 0.1);
  CHECK(cycle["period"].get<double>() > 4.0);
  CHECK(cycle["converged"].get<bool>());
  CHECK(summary.artifacts == std::vector<std::string>{"summary.json"});
}

TEST_CASE("allocate on the two-link network returns the max-min rates") {
  const auto dir = fresh_dir("allocate");
  const auto summary = run(data("maxmin_two_link.yaml"), Command::allocate, {dir, OutputFormat::both});
  const auto& routes = summary.results["routes"];
  REQUIRE(routes.size() == 3);
  CHECK(routes[0]["rate"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(routes[1]["rate"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(routes[2]["rate"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(routes[2]["bottlenecks"][0] == "L2");
  CHECK(summary.results["alpha"] == "max-min");
  CHECK(slurp(dir / "allocation.csv") == "route,rate,weight,bottlenecks\nA,0.5,1,L1\nB,0.5,1,L1\nC,1,1,L2\n");
}

TEST_CASE("allocate honours alpha and weights") {
  auto s = data("maxmin_two_link.yaml");
  s.fairness.alpha = fairness::FairnessAlpha(1.0);
  auto r = run(s, Command::allocate, {fresh_dir("alloc_pf"), OutputFormat::json}).results;
  CHECK(r["kkt_residual"].get<double>() < 1e-8);
  const double a = r["routes"][0]["rate"], b = r["routes"][1]["rate"], c = r["routes"][2]["rate"];
  CHECK(a + b == doctest::Approx(1.0));
  CHECK(b + c == doctest::Approx(1.5));
  s.fairness.weights["A"] = 4.0;
  r = run(s, Command::allocate, {fresh_dir("alloc_w"), OutputFormat::json}).results;
  CHECK(r["routes"][0]["rate"].get<double>() > a);
  CHECK(r["routes"][0]["weight"].get<double>() == 4.0);
  s.fairness.tcp_fair = true;
  s.network->routes[1].forward_delay = 0.1;
  s.network->routes[1].backward_delay = 0.1;
  r = run(s, Command::allocate, {fresh_dir("alloc_tcp"), OutputFormat::json}).results;
  CHECK(r["alpha"] == "2");
  // B has twice the rtt of A, so weight 1/rtt^2 is a quarter.
  CHECK(r["routes"][1]["weight"].get<double>() == doctest::Approx(r["routes"][0]["weight"].get<double>() / 4));
}

TEST_CASE("eta sweep locates the Hopf point within 3 percent") {
  const auto dir = fresh_dir("sweep");
  const auto summary = run(data("hopf_sweep_rcp.yaml"), Command::sweep, {dir, OutputFormat::both});
  const auto& r = summary.results;
  CHECK(std::abs(r["critical_value"].get<double>() - kHalfPi) / kHalfPi < 0.03);
  CHECK(r["relative_error"].get<double>() < 0.03);
  CHECK(r["samples"].size() == 13);
  const auto csv = slurp(dir / "sweep.csv");
  CHECK(first_line(csv) == "kind,parameter,amplitude,period,growth,verdict,converged");
  const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
  CHECK(rows == 1 + r["samples"].size() + r["refinements"].size());
}

TEST_CASE("sweep without a bifurcation in range records the bracket error") {
  const auto dir = fresh_dir("no_bracket");
  CHECK_THROWS_AS(run(data("hopf_sweep_no_bracket.yaml"), Command::sweep, {dir, OutputFormat::both}), stability::BracketError);
  const auto json = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(json["error"].get<std::string>().find("bracket") != std::string::npos);
  CHECK(json["results"]["samples"].size() == 8);
  for (const auto& s : json["results"]["samples"]) CHECK_FALSE(s["oscillating"].get<bool>());
  CHECK(fs::exists(dir / "sweep.csv"));
}

TEST_CASE("amplitude experiment reports a ratio near two") {
  const auto dir = fresh_dir("amplitude");
  const auto summary = run(data("amplitude_alpha.yaml"), Command::sweep, {dir, OutputFormat::both});
  const auto& ratios = summary.results["ratios_to_first"];
  REQUIRE(ratios.size() == 2);
  CHECK(ratios[1].get<double>() == doctest::Approx(2.0).epsilon(0.3));
  CHECK(first_line(slurp(dir / "amplitude.csv")) == "alpha,critical_kappa,kappa,log_amplitude,price_amplitude,period,converged");
}

TEST_CASE("sweep needs an experiment") {
  CHECK_THROWS_AS(run(data("fair_dual_single.yaml"), Command::sweep, {fresh_dir("no_exp"), OutputFormat::json}), ScenarioError);
}

TEST_CASE("trajectory CSV bodies are byte-identical across runs") {
  for (const char* name : {"fair_dual_single.yaml", "rcp_two_link.yaml", "tcp_constant_loss.yaml"}) {
    CAPTURE(name);
    const auto s = data(name);
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    run(s, Command::simulate, {a, OutputFormat::csv});
    run(s, Command::simulate, {b, OutputFormat::csv});
    const auto body = slurp(a / "trajectory.csv");
    CHECK(body.size() > 1000);
    CHECK(body == slurp(b / "trajectory.csv"));
    CHECK_FALSE(fs::exists(a / "summary.json"));
  }
}

TEST_CASE("CSV headers use the model state names") {
  CHECK(first_line(trajectory_csv(simulate_scenario(data("fair_dual_single.yaml")))) == "t,p");
  CHECK(first_line(trajectory_csv(simulate_scenario(data("rcp_single_unstable.yaml")))) == "t,R");
  CHECK(first_line(trajectory_csv(simulate_scenario(data("tcp_constant_loss.yaml")))) == "t,w");
  CHECK(first_line(trajectory_csv(simulate_scenario(data("rcp_two_link.yaml")))) == "t,R_L1,R_L2,q_L1,q_L2");
}

TEST_CASE("simulate reports equilibrium, final state and minimum") {
  const auto r = run(data("rcp_two_link.yaml"), Command::simulate, {fresh_dir("sim_rcp"), OutputFormat::json}).results;
  CHECK(r["model"] == "rcp");
  for (const char* k : {"R_L1", "R_L2", "q_L1", "q_L2"}) {
    CAPTURE(k);
    CHECK(r["minimum"][k].get<double>() >= 0.0);
  }
  for (const char* k : {"R_L1", "R_L2"}) {
    CAPTURE(k);
    CHECK(r["final"][k].get<double>() == doctest::Approx(r["equilibrium"][k].get<double>()).epsilon(1e-3));
  }
  // Without queue feedback (beta = 0) the backlog from the initial overshoot is not drained.
  CHECK(r["final"]["q_L1"].get<double>() > 0.0);
}

TEST_CASE("tcp simulation recovers x tau sqrt(p) = sqrt(2)") {
  const auto r = run(data("tcp_constant_loss.yaml"), Command::simulate, {fresh_dir("tcp"), OutputFormat::json}).results;
  CHECK(r["tcp"]["rate_rtt_sqrt_loss"].get<double>() == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("constant initial history is used verbatim") {
  auto s = data("fair_dual_single.yaml");
  s.integration.initial.kind = InitialSpec::Kind::constant;
  s.integration.initial.state = {3.0};
  const auto traj = simulate_scenario(s);
  CHECK(traj.state(0)[0] == 3.0);
  CHECK(initial_state(data("fair_dual_single.yaml")) == std::vector<double>{1.01});
}

TEST_CASE("output directory precedence: flag, environment, scenario, cwd") {
  auto s = data("fair_dual_single.yaml");
  s.output.dir = "from_scenario";
  ::unsetenv(kOutputDirEnv);
  CHECK(resolve_output_dir(std::string("from_flag"), s) == "from_flag");
  CHECK(resolve_output_dir(std::nullopt, s) == "from_scenario");
  ::setenv(kOutputDirEnv, "from_env", 1);
  CHECK(resolve_output_dir(std::string("from_flag"), s) == "from_flag");
  CHECK(resolve_output_dir(std::nullopt, s) == "from_env");
  ::unsetenv(kOutputDirEnv);
  s.output.dir.clear();
  CHECK(resolve_output_dir(std::nullopt, s) == ".");
}

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fluidcc/dde.hpp"
#include "fluidcc/models.hpp"
#include "fluidcc/scenario.hpp"

namespace fluidcc::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "FLUIDCC_OUT_DIR";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

enum class Command { simulate, allocate, stability, sweep };

std::string to_string(Command command);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  OutputFormat format = OutputFormat::both;
};

/// --out, then the environment variable, then the scenario's output.dir, then ".".
std::filesystem::path resolve_output_dir(const std::optional<std::string>& cli_out, const Scenario& scenario);

struct RunSummary {
  std::string scenario_digest;
  std::string scenario_name;
  std::string command;
  double wall_time = 0.0;  // seconds
  nlohmann::json results;
  std::vector<std::string> artifacts;  // file names relative to the output directory
  std::optional<std::string> error;

  nlohmann::json to_json() const;
};

/// Equilibrium of the selected model.
models::Equilibrium scenario_equilibrium(const Scenario& scenario);
/// Constant history from the scenario's initial specification.
dde::State initial_state(const Scenario& scenario);
dde::Trajectory simulate_scenario(const Scenario& scenario);

/// "t" then the state names; one row per step.
std::string trajectory_csv(const dde::Trajectory& trajectory);

/// Runs one command and writes its artifacts. Validation problems throw ValidationError;
/// numerical failures throw NumericalError after the artifacts describing them are written.
RunSummary run(const Scenario& scenario, Command command, const RunOptions& options);

}  // namespace fluidcc::cli

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fluidcc/dde.hpp"
#include "fluidcc/errors.hpp"
#include "fluidcc/fairness.hpp"
#include "fluidcc/models.hpp"
#include "fluidcc/topology.hpp"

namespace fluidcc::cli {

/// Scenario parse or validation failure. The message names the field path and, when known,
/// the source line.
class ScenarioError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class ModelKind { dual, fair_dual, rcp, rcp_single, tcp };

std::string to_string(ModelKind kind);

using ModelParams = std::variant<models::DualModelParams, models::RcpParams, models::RcpSingleLinkParams, models::TcpParams>;

struct ModelSpec {
  ModelKind kind = ModelKind::fair_dual;
  ModelParams params = models::DualModelParams{};

  bool operator==(const ModelSpec&) const = default;
};

struct FairnessSpec {
  fairness::FairnessAlpha alpha{1.0};
  bool tcp_fair = false;                  // alpha = 2, w = 1/rtt^2; overrides alpha and weights
  std::map<std::string, double> weights;  // route id -> w; absent routes get 1

  bool operator==(const FairnessSpec&) const = default;
};

struct InitialSpec {
  enum class Kind { equilibrium_offset, constant };
  Kind kind = Kind::equilibrium_offset;
  double offset = 0.01;       // history = equilibrium * (1 + offset)
  std::vector<double> state;  // for Kind::constant

  bool operator==(const InitialSpec&) const = default;
};

struct IntegrationSpec {
  double dt = 0.01;
  double t_end = 100.0;
  double transient_fraction = 0.5;
  InitialSpec initial;

  bool operator==(const IntegrationSpec&) const = default;
};

struct ExperimentSpec {
  enum class Kind { none, hopf_sweep, amplitude_vs_alpha };
  Kind kind = Kind::none;
  // hopf-sweep
  std::string parameter;  // "kappa" (fair-dual) or "eta" (rcp-single)
  double lo = 0.0;
  double hi = 0.0;
  std::size_t samples = 13;
  double relative_width = 0.01;
  double horizon_delays = 1000.0;
  // amplitude-vs-alpha
  std::vector<double> alphas;
  double epsilon = 0.05;

  bool operator==(const ExperimentSpec&) const = default;
};

enum class OutputFormat { csv, json, both };

std::string to_string(OutputFormat format);
OutputFormat parse_output_format(const std::string& text);

struct OutputSpec {
  std::string dir = ".";
  OutputFormat format = OutputFormat::both;

  bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
  std::string name;
  std::optional<NetworkDescription> network;
  ModelSpec model;
  FairnessSpec fairness;
  IntegrationSpec integration;
  ExperimentSpec experiment;
  OutputSpec output;

  bool operator==(const Scenario&) const = default;

  const models::DualModelParams& dual() const { return std::get<models::DualModelParams>(model.params); }
  const models::RcpParams& rcp() const { return std::get<models::RcpParams>(model.params); }
  const models::RcpSingleLinkParams& rcp_single() const { return std::get<models::RcpSingleLinkParams>(model.params); }
  const models::TcpParams& tcp() const { return std::get<models::TcpParams>(model.params); }
};

/// Parses and validates a YAML scenario file.
Scenario load_scenario(const std::filesystem::path& path);
/// Same, from text; `origin` prefixes error messages.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");

/// Full, explicit YAML form with fixed key order and shortest round-trip numbers.
/// `include_labels` = false drops the name and output sections.
std::string emit_canonical(const Scenario& scenario, bool include_labels = true);

/// 16 hex digits of FNV-1a over the canonical form without the name and output sections.
std::string scenario_digest(const Scenario& scenario);

/// Dynamics of the selected model. RCP requires a network.
dde::DelayedSystem model_system(const ModelSpec& model, const std::optional<NetworkDescription>& network);
dde::DelayedSystem scenario_system(const Scenario& scenario);

/// Network for the scenario; throws ScenarioError when the scenario has none.
Network scenario_network(const Scenario& scenario);

}  // namespace fluidcc::cli

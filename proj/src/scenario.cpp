#include "fluidcc/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "fluidcc/dde.hpp"
#include "fluidcc/numfmt.hpp"

namespace fluidcc::cli {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::dual: return "dual";
    case ModelKind::fair_dual: return "fair-dual";
    case ModelKind::rcp: return "rcp";
    case ModelKind::rcp_single: return "rcp-single";
    case ModelKind::tcp: return "tcp";
  }
  return "unknown";
}

std::string to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
    case OutputFormat::both: return "both";
  }
  return "both";
}

OutputFormat parse_output_format(const std::string& text) {
  if (text == "csv") return OutputFormat::csv;
  if (text == "json") return OutputFormat::json;
  if (text == "both") return OutputFormat::both;
  throw ScenarioError("unknown output format '" + text + "' (expected csv, json or both)");
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& path, const std::string& message) const {
    std::string where = origin_;
    if (at.IsDefined() && at.Mark().line >= 0) where += ":" + std::to_string(at.Mark().line + 1);
    throw ScenarioError(where + ": field '" + path + "': " + message);
  }

  void require_map(const YAML::Node& node, const std::string& path) const {
    if (!node.IsMap()) fail(node, path, "expected a mapping");
  }

  void check_keys(const YAML::Node& map, const std::string& path, std::initializer_list<const char*> allowed) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        fail(kv.first, join(path, key), "unknown field");
    }
  }

  bool has(const YAML::Node& map, const char* key) const { return static_cast<bool>(map[key]); }

  YAML::Node child(const YAML::Node& map, const char* key, const std::string& path) const {
    auto node = map[key];
    if (!node) fail(map, join(path, key), "missing required field");
    return node;
  }

  double number(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a number");
    double value = 0.0;
    try {
      value = node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, path, "expected a number, got '" + node.Scalar() + "'");
    }
    if (!std::isfinite(value)) fail(node, path, "must be finite");
    return value;
  }

  double number(const YAML::Node& map, const char* key, const std::string& path, std::optional<double> fallback = {}) const {
    if (!has(map, key)) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required field");
    }
    return number(map[key], join(path, key));
  }

  double positive(const YAML::Node& map, const char* key, const std::string& path, std::optional<double> fallback = {}) const {
    const double v = number(map, key, path, fallback);
    if (!(v > 0.0)) fail(has(map, key) ? map[key] : map, join(path, key), "must be positive");
    return v;
  }

  double non_negative(const YAML::Node& map, const char* key, const std::string& path, std::optional<double> fallback = {}) const {
    const double v = number(map, key, path, fallback);
    if (v < 0.0) fail(has(map, key) ? map[key] : map, join(path, key), "must be non-negative");
    return v;
  }

  long long integer(const YAML::Node& map, const char* key, const std::string& path, std::optional<long long> fallback = {}) const {
    if (!has(map, key)) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required field");
    }
    const auto node = map[key];
    try {
      if (node.IsScalar()) return node.as<long long>();
    } catch (const YAML::Exception&) {
    }
    fail(node, join(path, key), "expected an integer");
  }

  std::string text(const YAML::Node& node, const std::string& path) const {
    if (!node.IsScalar()) fail(node, path, "expected a string");
    return node.Scalar();
  }

  std::string text(const YAML::Node& map, const char* key, const std::string& path, std::optional<std::string> fallback = {}) const {
    if (!has(map, key)) {
      if (fallback) return *fallback;
      fail(map, join(path, key), "missing required field");
    }
    return text(map[key], join(path, key));
  }

  YAML::Node sequence(const YAML::Node& map, const char* key, const std::string& path) const {
    auto node = child(map, key, path);
    if (!node.IsSequence()) fail(node, join(path, key), "expected a sequence");
    return node;
  }

  fairness::FairnessAlpha alpha(const YAML::Node& node, const std::string& path) const {
    if (node.IsScalar() && (node.Scalar() == "max-min" || node.Scalar() == "maxmin"))
      return fairness::FairnessAlpha::max_min();
    const double v = number(node, path);
    if (!(v > 0.0)) fail(node, path, "must be positive or 'max-min'");
    return fairness::FairnessAlpha(v);
  }

  /// Runs a library validator and reports its message against `path`.
  template <typename F>
  void wrap(const YAML::Node& at, const std::string& path, F&& f) const {
    try {
      f();
    } catch (const ScenarioError&) {
      throw;
    } catch (const ValidationError& e) {
      fail(at, path, e.what());
    }
  }

 private:
  std::string origin_;
};

NetworkDescription parse_network(const Reader& rd, const YAML::Node& node) {
  const std::string path = "network";
  rd.require_map(node, path);
  rd.check_keys(node, path, {"links", "routes"});
  NetworkDescription desc;

  const auto links = rd.sequence(node, "links", path);
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto& ln = links[i];
    const auto lp = index_path("network.links", i);
    rd.require_map(ln, lp);
    rd.check_keys(ln, lp, {"id", "capacity"});
    desc.links.push_back({rd.text(ln, "id", lp), rd.number(ln, "capacity", lp)});
  }

  const auto routes = rd.sequence(node, "routes", path);
  for (std::size_t i = 0; i < routes.size(); ++i) {
    const auto& rn = routes[i];
    const auto rp = index_path("network.routes", i);
    rd.require_map(rn, rp);
    rd.check_keys(rn, rp, {"id", "links", "forward_delay", "backward_delay", "forward_delay_per_link", "return_delay_per_link"});
    Route r;
    r.id = rd.text(rn, "id", rp);
    const auto rl = rd.sequence(rn, "links", rp);
    for (std::size_t j = 0; j < rl.size(); ++j) r.links.push_back(rd.text(rl[j], index_path(join(rp, "links"), j)));
    r.forward_delay = rd.number(rn, "forward_delay", rp);
    r.backward_delay = rd.number(rn, "backward_delay", rp);
    for (const char* key : {"forward_delay_per_link", "return_delay_per_link"}) {
      if (!rd.has(rn, key)) continue;
      const auto m = rn[key];
      const auto mp = join(rp, key);
      rd.require_map(m, mp);
      auto& target = std::string(key) == "forward_delay_per_link" ? r.forward_delay_per_link : r.return_delay_per_link;
      for (const auto& kv : m) {
        const auto id = kv.first.as<std::string>();
        target[id] = rd.number(kv.second, join(mp, id));
      }
    }
    fill_default_link_delays(r);
    desc.routes.push_back(std::move(r));
  }

  const auto violations = validate(desc);
  if (!violations.empty()) {
    // Point at the offending entry when the violation names one.
    const auto& v = violations.front();
    for (std::size_t i = 0; i < desc.links.size(); ++i)
      if (v.entity == "link " + desc.links[i].id) rd.fail(links[i], index_path("network.links", i), v.message());
    for (std::size_t i = 0; i < desc.routes.size(); ++i)
      if (v.entity == "route " + desc.routes[i].id) rd.fail(routes[i], index_path("network.routes", i), v.message());
    rd.fail(node, path, v.message());
  }
  return desc;
}

models::DualModelParams parse_dual(const Reader& rd, const YAML::Node& node, bool fair) {
  const std::string path = "model";
  rd.check_keys(node, path, {"type", "kappa", "m", "capacity", "w", "fairness_alpha", "tau_f", "tau_b", "price_floor"});
  models::DualModelParams p;
  p.kappa = rd.positive(node, "kappa", path);
  if (fair) {
    p.m = static_cast<int>(rd.integer(node, "m", path, 1));
    if (p.m != 1) rd.fail(node["m"], "model.m", "fair-dual requires m = 1");
  } else {
    const auto m = rd.integer(node, "m", path);
    if (m != 0 && m != 1) rd.fail(node["m"], "model.m", "must be 0 or 1");
    p.m = static_cast<int>(m);
  }
  p.capacity = rd.positive(node, "capacity", path);
  p.w = rd.positive(node, "w", path, 1.0);
  p.fairness_alpha = rd.positive(node, "fairness_alpha", path, 1.0);
  p.tau_f = rd.non_negative(node, "tau_f", path);
  p.tau_b = rd.non_negative(node, "tau_b", path);
  p.price_floor = rd.positive(node, "price_floor", path, 1e-12);
  rd.wrap(node, path, [&] { models::validate(p); });
  return p;
}

models::RcpLinkParams parse_rcp_link(const Reader& rd, const YAML::Node& node, const std::string& path,
                                     models::RcpLinkParams base) {
  rd.require_map(node, path);
  rd.check_keys(node, path, {"gain_alpha", "beta", "mean_rtt"});
  base.gain_alpha = rd.positive(node, "gain_alpha", path, base.gain_alpha);
  base.beta = rd.non_negative(node, "beta", path, base.beta);
  base.mean_rtt = rd.positive(node, "mean_rtt", path, base.mean_rtt);
  return base;
}

models::RcpParams parse_rcp(const Reader& rd, const YAML::Node& node, const std::optional<NetworkDescription>& net) {
  const std::string path = "model";
  rd.check_keys(node, path, {"type", "defaults", "links", "queue", "buffer_exponent", "buffer_epsilon", "aggregation"});
  if (!net) rd.fail(node, "network", "rcp model requires a network section");
  models::RcpParams p;
  models::RcpLinkParams base;
  if (rd.has(node, "defaults")) base = parse_rcp_link(rd, node["defaults"], "model.defaults", base);
  p.links.assign(net->links.size(), base);
  if (rd.has(node, "links")) {
    const auto links = node["links"];
    rd.require_map(links, "model.links");
    for (const auto& kv : links) {
      const auto id = kv.first.as<std::string>();
      const auto it = std::find_if(net->links.begin(), net->links.end(), [&](const Link& l) { return l.id == id; });
      if (it == net->links.end()) rd.fail(kv.first, join("model.links", id), "no such link in the network");
      const auto k = static_cast<std::size_t>(it - net->links.begin());
      p.links[k] = parse_rcp_link(rd, kv.second, join("model.links", id), base);
    }
  }
  const auto queue = rd.text(node, "queue", path, "integrating");
  if (queue == "integrating")
    p.queue = models::QueueModel::integrating;
  else if (queue == "small-buffer")
    p.queue = models::QueueModel::small_buffer;
  else
    rd.fail(node["queue"], "model.queue", "expected 'integrating' or 'small-buffer'");
  p.buffer_exponent = rd.positive(node, "buffer_exponent", path, p.buffer_exponent);
  p.buffer_epsilon = rd.positive(node, "buffer_epsilon", path, p.buffer_epsilon);
  if (p.buffer_epsilon >= 1.0) rd.fail(node["buffer_epsilon"], "model.buffer_epsilon", "must be below 1");
  if (rd.has(node, "aggregation")) p.aggregation = rd.alpha(node["aggregation"], "model.aggregation");
  rd.wrap(node, path, [&] { models::validate(Network(*net), p); });
  return p;
}

models::RcpSingleLinkParams parse_rcp_single(const Reader& rd, const YAML::Node& node) {
  const std::string path = "model";
  rd.check_keys(node, path, {"type", "eta", "gain_alpha", "capacity", "tau"});
  models::RcpSingleLinkParams p;
  p.eta = rd.positive(node, "eta", path);
  p.gain_alpha = rd.positive(node, "gain_alpha", path, 1.0);
  p.capacity = rd.positive(node, "capacity", path);
  p.tau = rd.positive(node, "tau", path);
  rd.wrap(node, path, [&] { models::validate(p); });
  return p;
}

models::TcpParams parse_tcp(const Reader& rd, const YAML::Node& node) {
  const std::string path = "model";
  rd.check_keys(node, path, {"type", "rtt", "n_flows", "loss"});
  models::TcpParams p;
  p.rtt = rd.positive(node, "rtt", path);
  const auto n = rd.integer(node, "n_flows", path, 1);
  if (n < 1) rd.fail(node["n_flows"], "model.n_flows", "must be at least 1");
  p.n_flows = static_cast<int>(n);
  const auto loss = rd.child(node, "loss", path);
  const std::string lp = "model.loss";
  rd.require_map(loss, lp);
  const auto kind = rd.text(loss, "type", lp);
  if (kind == "constant") {
    rd.check_keys(loss, lp, {"type", "probability"});
    const double prob = rd.positive(loss, "probability", lp);
    if (prob > 1.0) rd.fail(loss["probability"], join(lp, "probability"), "must not exceed 1");
    p.loss = models::LossModel::constant(prob);
  } else if (kind == "small-buffer") {
    rd.check_keys(loss, lp, {"type", "capacity", "exponent"});
    p.loss = models::LossModel::small_buffer(rd.positive(loss, "capacity", lp), rd.positive(loss, "exponent", lp, 20.0));
  } else {
    rd.fail(loss["type"], join(lp, "type"), "expected 'constant' or 'small-buffer'");
  }
  rd.wrap(node, path, [&] { models::validate(p); });
  return p;
}

ModelSpec parse_model(const Reader& rd, const YAML::Node& node, const std::optional<NetworkDescription>& net) {
  rd.require_map(node, "model");
  const auto type = rd.text(node, "type", "model");
  ModelSpec spec;
  if (type == "dual") {
    spec.kind = ModelKind::dual;
    spec.params = parse_dual(rd, node, false);
  } else if (type == "fair-dual") {
    spec.kind = ModelKind::fair_dual;
    spec.params = parse_dual(rd, node, true);
  } else if (type == "rcp") {
    spec.kind = ModelKind::rcp;
    spec.params = parse_rcp(rd, node, net);
  } else if (type == "rcp-single") {
    spec.kind = ModelKind::rcp_single;
    spec.params = parse_rcp_single(rd, node);
  } else if (type == "tcp") {
    spec.kind = ModelKind::tcp;
    spec.params = parse_tcp(rd, node);
  } else {
    rd.fail(node["type"], "model.type", "expected one of dual, fair-dual, rcp, rcp-single, tcp; got '" + type + "'");
  }
  return spec;
}

FairnessSpec parse_fairness(const Reader& rd, const YAML::Node& node, const std::optional<NetworkDescription>& net) {
  const std::string path = "fairness";
  rd.require_map(node, path);
  rd.check_keys(node, path, {"alpha", "preset", "weights"});
  FairnessSpec f;
  if (rd.has(node, "alpha")) f.alpha = rd.alpha(node["alpha"], "fairness.alpha");
  const auto preset = rd.text(node, "preset", path, "none");
  if (preset == "tcp-fair")
    f.tcp_fair = true;
  else if (preset != "none")
    rd.fail(node["preset"], "fairness.preset", "expected 'none' or 'tcp-fair'");
  if (rd.has(node, "weights")) {
    const auto w = node["weights"];
    rd.require_map(w, "fairness.weights");
    for (const auto& kv : w) {
      const auto id = kv.first.as<std::string>();
      const auto wp = join("fairness.weights", id);
      if (!net || std::none_of(net->routes.begin(), net->routes.end(), [&](const Route& r) { return r.id == id; }))
        rd.fail(kv.first, wp, "no such route in the network");
      const double v = rd.number(kv.second, wp);
      if (!(v > 0.0)) rd.fail(kv.second, wp, "must be positive");
      f.weights[id] = v;
    }
  }
  return f;
}

}  // namespace

dde::DelayedSystem model_system(const ModelSpec& model, const std::optional<NetworkDescription>& net) {
  switch (model.kind) {
    case ModelKind::dual:
    case ModelKind::fair_dual: return models::dual_rhs(std::get<models::DualModelParams>(model.params));
    case ModelKind::rcp: return models::rcp_rhs(Network(*net), std::get<models::RcpParams>(model.params));
    case ModelKind::rcp_single: return models::rcp_single_link_rhs(std::get<models::RcpSingleLinkParams>(model.params));
    case ModelKind::tcp: return models::tcp_rhs(std::get<models::TcpParams>(model.params));
  }
  throw std::logic_error("unreachable");
}

namespace {

double min_positive_delay(const dde::DelayedSystem& sys) {
  double m = std::numeric_limits<double>::infinity();
  for (double d : sys.delays)
    if (d > 0.0) m = std::min(m, d);
  return m;
}

IntegrationSpec parse_integration(const Reader& rd, const YAML::Node& node, const dde::DelayedSystem& sys) {
  const std::string path = "integration";
  const double smallest = min_positive_delay(sys);
  const double largest = sys.max_delay();
  const double scale = std::isfinite(smallest) ? smallest : 1.0;
  IntegrationSpec s;
  s.dt = scale / 100.0;
  s.t_end = 200.0 * (largest > 0.0 ? largest : 1.0);
  if (!node) return s;
  rd.require_map(node, path);
  rd.check_keys(node, path, {"dt", "t_end", "transient_fraction", "initial"});
  s.dt = rd.positive(node, "dt", path, s.dt);
  if (std::isfinite(smallest) && s.dt > smallest / 10.0 * (1.0 + 1e-12))
    rd.fail(node["dt"], "integration.dt", "must not exceed a tenth of the smallest delay (" + format_double(smallest) + ")");
  s.t_end = rd.positive(node, "t_end", path, s.t_end);
  if (s.t_end < s.dt) rd.fail(node["t_end"], "integration.t_end", "must be at least dt");
  s.transient_fraction = rd.number(node, "transient_fraction", path, 0.5);
  if (s.transient_fraction < 0.0 || s.transient_fraction >= 1.0)
    rd.fail(node["transient_fraction"], "integration.transient_fraction", "must lie in [0, 1)");
  if (rd.has(node, "initial")) {
    const auto in = node["initial"];
    const std::string ip = "integration.initial";
    rd.require_map(in, ip);
    const auto kind = rd.text(in, "type", ip);
    if (kind == "equilibrium-offset") {
      rd.check_keys(in, ip, {"type", "offset"});
      s.initial.kind = InitialSpec::Kind::equilibrium_offset;
      s.initial.offset = rd.number(in, "offset", ip, 0.01);
      if (s.initial.offset <= -1.0) rd.fail(in["offset"], join(ip, "offset"), "must exceed -1");
    } else if (kind == "constant") {
      rd.check_keys(in, ip, {"type", "state"});
      s.initial.kind = InitialSpec::Kind::constant;
      const auto st = rd.sequence(in, "state", ip);
      for (std::size_t i = 0; i < st.size(); ++i) {
        const auto sp = index_path(join(ip, "state"), i);
        const double v = rd.number(st[i], sp);
        if (v < 0.0) rd.fail(st[i], sp, "must be non-negative");
        s.initial.state.push_back(v);
      }
      if (s.initial.state.size() != sys.dimension)
        rd.fail(st, join(ip, "state"),
                "expected " + std::to_string(sys.dimension) + " values, got " + std::to_string(s.initial.state.size()));
    } else {
      rd.fail(in["type"], join(ip, "type"), "expected 'equilibrium-offset' or 'constant'");
    }
  }
  return s;
}

std::vector<double> number_list(const Reader& rd, const YAML::Node& map, const char* key, const std::string& path) {
  const auto seq = rd.sequence(map, key, path);
  std::vector<double> out;
  for (std::size_t i = 0; i < seq.size(); ++i) out.push_back(rd.number(seq[i], index_path(join(path, key), i)));
  return out;
}

ExperimentSpec parse_experiment(const Reader& rd, const YAML::Node& node, ModelKind model) {
  const std::string path = "experiment";
  ExperimentSpec e;
  if (!node) return e;
  rd.require_map(node, path);
  const auto kind = rd.text(node, "type", path, "none");
  if (kind == "none") {
    rd.check_keys(node, path, {"type"});
  } else if (kind == "hopf-sweep") {
    rd.check_keys(node, path, {"type", "parameter", "range", "samples", "relative_width", "horizon"});
    e.kind = ExperimentSpec::Kind::hopf_sweep;
    const std::string expected = model == ModelKind::fair_dual ? "kappa" : model == ModelKind::rcp_single ? "eta" : "";
    if (expected.empty()) rd.fail(node, "model.type", "hopf-sweep requires a fair-dual or rcp-single model");
    e.parameter = rd.text(node, "parameter", path, expected);
    if (e.parameter != expected)
      rd.fail(node["parameter"], "experiment.parameter", "the " + to_string(model) + " model sweeps '" + expected + "'");
    const auto range = number_list(rd, node, "range", path);
    if (range.size() != 2) rd.fail(node["range"], "experiment.range", "expected [lo, hi]");
    e.lo = range[0];
    e.hi = range[1];
    if (!(e.lo > 0.0 && e.lo < e.hi)) rd.fail(node["range"], "experiment.range", "expected 0 < lo < hi");
    const auto n = rd.integer(node, "samples", path, 13);
    if (n < 8) rd.fail(node["samples"], "experiment.samples", "must be at least 8");
    e.samples = static_cast<std::size_t>(n);
    e.relative_width = rd.positive(node, "relative_width", path, 0.01);
    e.horizon_delays = rd.positive(node, "horizon", path, 1000.0);
  } else if (kind == "amplitude-vs-alpha") {
    rd.check_keys(node, path, {"type", "alphas", "epsilon", "horizon"});
    e.kind = ExperimentSpec::Kind::amplitude_vs_alpha;
    if (model != ModelKind::fair_dual) rd.fail(node, "model.type", "amplitude-vs-alpha requires a fair-dual model");
    e.alphas = number_list(rd, node, "alphas", path);
    if (e.alphas.empty()) rd.fail(node["alphas"], "experiment.alphas", "must not be empty");
    for (std::size_t i = 0; i < e.alphas.size(); ++i)
      if (!(e.alphas[i] > 0.0)) rd.fail(node["alphas"][i], index_path("experiment.alphas", i), "must be positive");
    e.epsilon = rd.positive(node, "epsilon", path, 0.05);
    e.horizon_delays = rd.positive(node, "horizon", path, 1000.0);
  } else {
    rd.fail(node["type"], "experiment.type", "expected 'none', 'hopf-sweep' or 'amplitude-vs-alpha'");
  }
  return e;
}

OutputSpec parse_output(const Reader& rd, const YAML::Node& node) {
  OutputSpec o;
  if (!node) return o;
  rd.require_map(node, "output");
  rd.check_keys(node, "output", {"dir", "format"});
  o.dir = rd.text(node, "dir", "output", ".");
  const auto fmt = rd.text(node, "format", "output", "both");
  try {
    o.format = parse_output_format(fmt);
  } catch (const ScenarioError& e) {
    rd.fail(node["format"], "output.format", e.what());
  }
  return o;
}

// ---------------------------------------------------------------------------
// Canonical emission

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned>(static_cast<unsigned char>(c)));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

std::string num(double v) { return format_double(v); }

std::string alpha_text(const fairness::FairnessAlpha& a) { return a.is_max_min() ? "max-min" : num(a.value()); }

std::string delay_map(const std::map<std::string, double>& m) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : m) {
    out += (first ? "" : ", ") + quote(k) + ": " + num(v);
    first = false;
  }
  return out + "}";
}

std::string number_seq(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + num(v[i]);
  return out + "]";
}

void emit_body(std::ostringstream& os, const Scenario& s) {
  if (s.network) {
    os << "network:\n  links:\n";
    for (const auto& l : s.network->links) os << "    - id: " << quote(l.id) << "\n      capacity: " << num(l.capacity) << "\n";
    os << "  routes:\n";
    for (const auto& r : s.network->routes) {
      os << "    - id: " << quote(r.id) << "\n      links: [";
      for (std::size_t i = 0; i < r.links.size(); ++i) os << (i ? ", " : "") << quote(r.links[i]);
      os << "]\n      forward_delay: " << num(r.forward_delay) << "\n      backward_delay: " << num(r.backward_delay)
         << "\n      forward_delay_per_link: " << delay_map(r.forward_delay_per_link)
         << "\n      return_delay_per_link: " << delay_map(r.return_delay_per_link) << "\n";
    }
  }

  os << "model:\n  type: " << to_string(s.model.kind) << "\n";
  switch (s.model.kind) {
    case ModelKind::dual:
    case ModelKind::fair_dual: {
      const auto& p = s.dual();
      os << "  kappa: " << num(p.kappa) << "\n";
      if (s.model.kind == ModelKind::dual) os << "  m: " << p.m << "\n";
      os << "  capacity: " << num(p.capacity) << "\n  w: " << num(p.w) << "\n  fairness_alpha: " << num(p.fairness_alpha)
         << "\n  tau_f: " << num(p.tau_f) << "\n  tau_b: " << num(p.tau_b) << "\n  price_floor: " << num(p.price_floor)
         << "\n";
      break;
    }
    case ModelKind::rcp: {
      const auto& p = s.rcp();
      os << "  links:\n";
      for (std::size_t k = 0; k < p.links.size(); ++k) {
        const auto& l = p.links[k];
        os << "    " << quote(s.network->links[k].id) << ": {gain_alpha: " << num(l.gain_alpha) << ", beta: " << num(l.beta)
           << ", mean_rtt: " << num(l.mean_rtt) << "}\n";
      }
      os << "  queue: " << (p.queue == models::QueueModel::integrating ? "integrating" : "small-buffer")
         << "\n  buffer_exponent: " << num(p.buffer_exponent) << "\n  buffer_epsilon: " << num(p.buffer_epsilon)
         << "\n  aggregation: " << alpha_text(p.aggregation) << "\n";
      break;
    }
    case ModelKind::rcp_single: {
      const auto& p = s.rcp_single();
      os << "  eta: " << num(p.eta) << "\n  gain_alpha: " << num(p.gain_alpha) << "\n  capacity: " << num(p.capacity)
         << "\n  tau: " << num(p.tau) << "\n";
      break;
    }
    case ModelKind::tcp: {
      const auto& p = s.tcp();
      os << "  rtt: " << num(p.rtt) << "\n  n_flows: " << p.n_flows << "\n  loss:\n";
      if (p.loss.kind == models::LossModel::Kind::constant)
        os << "    type: constant\n    probability: " << num(p.loss.probability) << "\n";
      else
        os << "    type: small-buffer\n    capacity: " << num(p.loss.capacity) << "\n    exponent: " << num(p.loss.exponent)
           << "\n";
      break;
    }
  }

  os << "fairness:\n  alpha: " << alpha_text(s.fairness.alpha) << "\n  preset: " << (s.fairness.tcp_fair ? "tcp-fair" : "none")
     << "\n  weights: " << delay_map(s.fairness.weights) << "\n";

  const auto& in = s.integration;
  os << "integration:\n  dt: " << num(in.dt) << "\n  t_end: " << num(in.t_end)
     << "\n  transient_fraction: " << num(in.transient_fraction) << "\n  initial:\n";
  if (in.initial.kind == InitialSpec::Kind::equilibrium_offset)
    os << "    type: equilibrium-offset\n    offset: " << num(in.initial.offset) << "\n";
  else
    os << "    type: constant\n    state: " << number_seq(in.initial.state) << "\n";

  const auto& e = s.experiment;
  switch (e.kind) {
    case ExperimentSpec::Kind::none: os << "experiment:\n  type: none\n"; break;
    case ExperimentSpec::Kind::hopf_sweep:
      os << "experiment:\n  type: hopf-sweep\n  parameter: " << e.parameter << "\n  range: " << number_seq({e.lo, e.hi})
         << "\n  samples: " << e.samples << "\n  relative_width: " << num(e.relative_width)
         << "\n  horizon: " << num(e.horizon_delays) << "\n";
      break;
    case ExperimentSpec::Kind::amplitude_vs_alpha:
      os << "experiment:\n  type: amplitude-vs-alpha\n  alphas: " << number_seq(e.alphas) << "\n  epsilon: " << num(e.epsilon)
         << "\n  horizon: " << num(e.horizon_delays) << "\n";
      break;
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(origin + ":" + std::to_string(e.mark.line + 1) + ": parse error: " + e.msg);
  }
  Reader rd(origin);
  if (!root.IsMap()) rd.fail(root, "<root>", "expected a mapping at the top level");
  rd.check_keys(root, "", {"name", "network", "model", "fairness", "integration", "experiment", "output"});

  Scenario s;
  s.name = rd.text(root, "name", "", "");
  if (rd.has(root, "network")) s.network = parse_network(rd, root["network"]);
  s.model = parse_model(rd, rd.child(root, "model", ""), s.network);
  if (rd.has(root, "fairness")) s.fairness = parse_fairness(rd, root["fairness"], s.network);
  const auto sys = model_system(s.model, s.network);
  s.integration = parse_integration(rd, root["integration"], sys);
  s.experiment = parse_experiment(rd, root["experiment"], s.model.kind);
  s.output = parse_output(rd, root["output"]);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError(path.string() + ": cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string emit_canonical(const Scenario& scenario, bool include_labels) {
  std::ostringstream os;
  if (include_labels) os << "name: " << quote(scenario.name) << "\n";
  emit_body(os, scenario);
  if (include_labels)
    os << "output:\n  dir: " << quote(scenario.output.dir) << "\n  format: " << to_string(scenario.output.format) << "\n";
  return os.str();
}

std::string scenario_digest(const Scenario& scenario) {
  const auto text = emit_canonical(scenario, false);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

dde::DelayedSystem scenario_system(const Scenario& scenario) { return model_system(scenario.model, scenario.network); }

Network scenario_network(const Scenario& scenario) {
  if (!scenario.network) throw ScenarioError("field 'network': missing required field");
  return Network(*scenario.network);
}

}  // namespace fluidcc::cli

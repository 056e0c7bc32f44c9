#include "fluidcc/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "fluidcc/errors.hpp"
#include "fluidcc/numfmt.hpp"

namespace fluidcc::models {

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ValidationError(field + ": " + rule);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }
bool nonnegative(double v) { return v >= 0.0 && std::isfinite(v); }

// max |rhs| with every delayed slot holding `state`.
double constant_history_residual(const dde::DelayedSystem& system, std::span<const double> state) {
  dde::DelayedStates delayed(system.dimension, system.delays.size());
  for (std::size_t d = 0; d < system.delays.size(); ++d) std::copy(state.begin(), state.end(), delayed.slot(d).begin());
  std::vector<double> dx(system.dimension);
  system.derivative(0.0, state, delayed, dx);
  double worst = 0.0;
  for (double v : dx) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dual

void validate(const DualModelParams& p) {
  require(positive(p.kappa), "kappa", "must be positive");
  require(p.m == 0 || p.m == 1, "m", "must be 0 (delay dual) or 1 (fair dual)");
  require(positive(p.capacity), "capacity", "must be positive");
  require(positive(p.w), "w", "must be positive");
  require(positive(p.fairness_alpha), "fairness_alpha", "must be positive");
  require(nonnegative(p.tau_f), "tau_f", "must be >= 0");
  require(nonnegative(p.tau_b), "tau_b", "must be >= 0");
  require(positive(p.price_floor), "price_floor", "must be positive");
}

dde::DelayedSystem dual_rhs(const DualModelParams& params) {
  validate(params);
  dde::DelayedSystem sys;
  sys.dimension = 1;
  sys.delays = {params.tau()};
  sys.projection_floor = {true};
  sys.state_names = {"p"};
  sys.rhs = [params](double, std::span<const double> x, const dde::DelayedStates& delayed, std::span<double> dx) {
    const double p = x[0];
    const double p_delayed = std::max(delayed[0][0], params.price_floor);
    const double rate = fairness::demand(p_delayed, params.w, params.fairness_alpha);
    const double gain = params.m == 1 ? params.kappa * p : params.kappa;
    const double supply = p > 0.0 ? params.capacity : 0.0;
    dx[0] = gain * (rate - supply);
  };
  return sys;
}

dde::DelayedSystem fair_dual_rhs(const DualModelParams& params) {
  validate(params);
  if (params.m != 1) throw ValidationError("m: fair dual requires m = 1");
  dde::DelayedSystem sys;
  sys.dimension = 1;
  sys.delays = {params.tau()};
  sys.projection_floor = {true};
  sys.state_names = {"p"};
  sys.rhs = [params](double, std::span<const double> x, const dde::DelayedStates& delayed, std::span<double> dx) {
    const double p_delayed = std::max(delayed[0][0], params.price_floor);
    dx[0] = params.kappa * x[0] * (fairness::demand(p_delayed, params.w, params.fairness_alpha) - params.capacity);
  };
  return sys;
}

Equilibrium dual_equilibrium(const DualModelParams& params) {
  validate(params);
  const double p_star = params.w / std::pow(params.capacity, params.fairness_alpha);
  Equilibrium eq{{p_star}, 0.0};
  eq.residual = constant_history_residual(dual_rhs(params), eq.state);
  return eq;
}

// ---------------------------------------------------------------------------
// RCP

void validate(const Network& network, const RcpParams& params) {
  require(params.links.size() == network.links().size(), "rcp.links", "need one parameter set per network link");
  for (std::size_t l = 0; l < params.links.size(); ++l) {
    const std::string field = "rcp.links." + network.links()[l].id;
    require(positive(params.links[l].gain_alpha), field + ".gain_alpha", "must be positive");
    require(nonnegative(params.links[l].beta), field + ".beta", "must be >= 0");
    require(positive(params.links[l].mean_rtt), field + ".mean_rtt", "must be positive");
  }
  require(positive(params.buffer_exponent), "rcp.buffer_exponent", "must be positive");
  require(params.buffer_epsilon > 0.0 && params.buffer_epsilon < 1.0, "rcp.buffer_epsilon", "must lie in (0, 1)");
  if (!params.aggregation.is_max_min())
    require(params.aggregation.value() > 0.0, "rcp.aggregation_alpha", "must be positive or max-min");
}

double small_buffer_queue(double rho, double exponent, double epsilon) {
  const double r = std::max(rho, 0.0);
  return std::pow(r, exponent) / (1.0 - std::min(r, 1.0 - epsilon));
}

dde::DelayedSystem rcp_rhs(const Network& network, const RcpParams& params) {
  validate(network, params);
  const std::size_t n_links = network.links().size();
  const std::size_t n_routes = network.routes().size();
  const bool integrating = params.queue == QueueModel::integrating;

  // term[r][a][b]: delay index for R_j (j = b-th link of r) as seen at link l (a-th link of r).
  std::map<double, std::size_t> delay_ids;
  std::vector<std::vector<std::vector<double>>> raw(n_routes);
  for (std::size_t r = 0; r < n_routes; ++r) {
    const auto& path = network.links_of(r);
    raw[r].assign(path.size(), std::vector<double>(path.size()));
    for (std::size_t a = 0; a < path.size(); ++a)
      for (std::size_t b = 0; b < path.size(); ++b) {
        const double d = network.forward_delay(r, path[a]) + network.return_delay(r, path[b]);
        raw[r][a][b] = d;
        delay_ids.emplace(d, 0);
      }
  }
  std::vector<double> delays;
  for (auto& [d, id] : delay_ids) {
    id = delays.size();
    delays.push_back(d);
  }
  std::vector<std::vector<std::vector<std::size_t>>> term(n_routes);
  for (std::size_t r = 0; r < n_routes; ++r) {
    term[r].resize(raw[r].size());
    for (std::size_t a = 0; a < raw[r].size(); ++a)
      for (double d : raw[r][a]) term[r][a].push_back(delay_ids.at(d));
  }

  dde::DelayedSystem sys;
  sys.dimension = integrating ? 2 * n_links : n_links;
  sys.delays = delays;
  sys.projection_floor.assign(sys.dimension, true);
  for (const auto& link : network.links()) sys.state_names.push_back("R_" + link.id);
  if (integrating)
    for (const auto& link : network.links()) sys.state_names.push_back("q_" + link.id);

  std::vector<double> capacity(n_links);
  for (std::size_t l = 0; l < n_links; ++l) capacity[l] = network.links()[l].capacity;
  std::vector<std::vector<std::size_t>> paths(n_routes);
  for (std::size_t r = 0; r < n_routes; ++r) paths[r] = network.links_of(r);

  sys.rhs = [paths, term, capacity, params, integrating, n_links](
                double, std::span<const double> x, const dde::DelayedStates& delayed, std::span<double> dx) {
    std::vector<double> y(n_links, 0.0);
    std::vector<double> seen;
    for (std::size_t r = 0; r < paths.size(); ++r) {
      const auto& path = paths[r];
      for (std::size_t a = 0; a < path.size(); ++a) {
        seen.clear();
        for (std::size_t b = 0; b < path.size(); ++b)
          seen.push_back(std::max(delayed[term[r][a][b]][path[b]], std::numeric_limits<double>::min()));
        y[path[a]] += fairness::rate_feedback_aggregate(seen, params.aggregation);
      }
    }
    for (std::size_t l = 0; l < n_links; ++l) {
      const auto& lp = params.links[l];
      const double c = capacity[l];
      double q;
      if (integrating) {
        q = x[n_links + l];
        dx[n_links + l] = y[l] - c;
      } else {
        q = small_buffer_queue(y[l] / c, params.buffer_exponent, params.buffer_epsilon);
      }
      const double feedback =
          lp.gain_alpha / (lp.mean_rtt * c) * (c - y[l]) - lp.beta * q / (lp.mean_rtt * lp.mean_rtt * c);
      dx[l] = x[l] * feedback;
    }
  };
  return sys;
}

Equilibrium rcp_equilibrium(const Network& network, const RcpParams& params) {
  const auto sys = rcp_rhs(network, params);
  const std::size_t n = network.links().size();
  for (std::size_t l = 0; l < n; ++l)
    if (network.routes_through(l).empty())
      throw ConvergenceError("link " + network.links()[l].id + " carries no route; its rate grows without bound",
                             {}, std::numeric_limits<double>::infinity());

  // Start from water-filling fair shares.
  const auto mm = fairness::maxmin_allocate(network);
  std::vector<double> u(n);
  for (std::size_t l = 0; l < n; ++l) {
    double share = 0.0;
    for (std::size_t r : network.routes_through(l)) share = std::max(share, mm.rates[r]);
    u[l] = std::log(share);
  }

  std::vector<double> state(sys.dimension, 0.0);
  auto feedback = [&](const std::vector<double>& uu) {
    for (std::size_t l = 0; l < n; ++l) state[l] = std::exp(uu[l]);
    dde::DelayedStates delayed(sys.dimension, sys.delays.size());
    for (std::size_t d = 0; d < sys.delays.size(); ++d) std::copy(state.begin(), state.end(), delayed.slot(d).begin());
    std::vector<double> dx(sys.dimension);
    sys.rhs(0.0, state, delayed, dx);
    std::vector<double> f(n);
    for (std::size_t l = 0; l < n; ++l) f[l] = dx[l] / state[l];
    return f;
  };
  auto norm = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double e : v) m = std::max(m, std::abs(e));
    return m;
  };

  auto f = feedback(u);
  for (int it = 0; it < 100 && norm(f) > 1e-14; ++it) {
    // Central-difference Jacobian in log rate.
    std::vector<double> jac(n * n);
    for (std::size_t k = 0; k < n; ++k) {
      auto up = u, dn = u;
      const double h = 1e-6;
      up[k] += h;
      dn[k] -= h;
      const auto fu = feedback(up), fd = feedback(dn);
      for (std::size_t i = 0; i < n; ++i) jac[i * n + k] = (fu[i] - fd[i]) / (2.0 * h);
    }
    // Gaussian elimination with partial pivoting on J s = -f.
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = -f[i];
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t piv = c;
      for (std::size_t i = c + 1; i < n; ++i)
        if (std::abs(jac[i * n + c]) > std::abs(jac[piv * n + c])) piv = i;
      if (jac[piv * n + c] == 0.0)
        throw ConvergenceError("rcp_equilibrium: singular Jacobian (equilibrium not isolated)", state, norm(f));
      if (piv != c) {
        for (std::size_t k = 0; k < n; ++k) std::swap(jac[c * n + k], jac[piv * n + k]);
        std::swap(rhs[c], rhs[piv]);
      }
      for (std::size_t i = c + 1; i < n; ++i) {
        const double factor = jac[i * n + c] / jac[c * n + c];
        for (std::size_t k = c; k < n; ++k) jac[i * n + k] -= factor * jac[c * n + k];
        rhs[i] -= factor * rhs[c];
      }
    }
    std::vector<double> step(n);
    for (std::size_t i = n; i-- > 0;) {
      double s = rhs[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= jac[i * n + k] * step[k];
      step[i] = s / jac[i * n + i];
    }
    double lambda = 1.0;
    const double f0 = norm(f);
    for (; lambda > 1e-6; lambda *= 0.5) {
      auto trial = u;
      for (std::size_t i = 0; i < n; ++i) trial[i] += lambda * step[i];
      const auto ft = feedback(trial);
      if (norm(ft) < f0) {
        u = trial;
        f = ft;
        break;
      }
    }
    if (lambda <= 1e-6) break;
  }

  Equilibrium eq;
  eq.state.assign(sys.dimension, 0.0);
  for (std::size_t l = 0; l < n; ++l) eq.state[l] = std::exp(u[l]);
  eq.residual = constant_history_residual(sys, eq.state);
  if (!(eq.residual < 1e-10)) throw ConvergenceError("rcp_equilibrium did not converge", eq.state, eq.residual);
  return eq;
}

void validate(const RcpSingleLinkParams& p) {
  require(positive(p.eta), "eta", "must be positive");
  require(positive(p.gain_alpha), "gain_alpha", "must be positive");
  require(positive(p.capacity), "capacity", "must be positive");
  require(positive(p.tau), "tau", "must be positive");
}

dde::DelayedSystem rcp_single_link_rhs(const RcpSingleLinkParams& params) {
  validate(params);
  dde::DelayedSystem sys;
  sys.dimension = 1;
  sys.delays = {params.tau};
  sys.projection_floor = {true};
  sys.state_names = {"R"};
  const double gain = params.eta * params.gain_alpha / (params.capacity * params.tau);
  sys.rhs = [gain, c = params.capacity](double, std::span<const double> x, const dde::DelayedStates& delayed,
                                        std::span<double> dx) { dx[0] = gain * x[0] * (c - delayed[0][0]); };
  return sys;
}

Equilibrium rcp_single_link_equilibrium(const RcpSingleLinkParams& params) {
  Equilibrium eq{{params.capacity}, 0.0};
  eq.residual = constant_history_residual(rcp_single_link_rhs(params), eq.state);
  return eq;
}

// ---------------------------------------------------------------------------
// TCP

double LossModel::operator()(double aggregate_rate) const {
  if (kind == Kind::constant) return probability;
  return std::min(1.0, std::pow(std::max(aggregate_rate, 0.0) / capacity, exponent));
}

void validate(const TcpParams& p) {
  require(positive(p.rtt), "rtt", "must be positive");
  require(p.n_flows >= 1, "n_flows", "must be >= 1");
  if (p.loss.kind == LossModel::Kind::constant) {
    require(p.loss.probability >= 0.0 && p.loss.probability <= 1.0, "loss.p", "must lie in [0, 1]");
  } else {
    require(positive(p.loss.capacity), "loss.capacity", "must be positive");
    require(positive(p.loss.exponent), "loss.exponent", "must be positive");
  }
}

dde::DelayedSystem tcp_rhs(const TcpParams& params) {
  validate(params);
  dde::DelayedSystem sys;
  sys.dimension = 1;
  sys.delays = {params.rtt};
  sys.projection_floor = {true};
  sys.state_names = {"w"};
  sys.rhs = [params](double, std::span<const double> x, const dde::DelayedStates& delayed, std::span<double> dx) {
    const double rate = delayed[0][0] / params.rtt;
    const double loss = params.loss(static_cast<double>(params.n_flows) * rate);
    dx[0] = 1.0 / params.rtt - 0.5 * x[0] * rate * loss;
  };
  return sys;
}

Equilibrium tcp_equilibrium(const TcpParams& params) {
  validate(params);
  const double n = static_cast<double>(params.n_flows);
  auto excess = [&](double w) { return w * w * params.loss(n * w / params.rtt) - 2.0; };
  double w_star;
  if (params.loss.kind == LossModel::Kind::constant) {
    if (!(params.loss.probability > 0.0))
      throw ConvergenceError("tcp_equilibrium: no equilibrium without loss", {}, std::numeric_limits<double>::infinity());
    w_star = std::sqrt(2.0 / params.loss.probability);
  } else {
    double lo = 0.0, hi = 1.0;
    while (excess(hi) < 0.0) {
      hi *= 2.0;
      if (hi > 1e300) throw ConvergenceError("tcp_equilibrium: bracket expansion failed", {hi}, excess(hi));
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    w_star = 0.5 * (lo + hi);
  }
  Equilibrium eq{{w_star}, 0.0};
  eq.residual = constant_history_residual(tcp_rhs(params), eq.state);
  return eq;
}

double tcp_equilibrium_rate(double rtt, double loss_probability) {
  if (!(rtt > 0.0) || !(loss_probability > 0.0)) throw std::domain_error("tcp_equilibrium_rate: rtt and p must be positive");
  return std::sqrt(2.0 / loss_probability) / rtt;
}

double tcp_fair_dual_rate(double tau, double price) {
  return fairness::demand(price, 1.0 / (tau * tau), 2.0);
}

double traffic_intensity(double rate, double capacity) {
  if (!(capacity > 0.0)) throw std::domain_error("traffic_intensity: capacity must be positive");
  return rate / capacity;
}

}  // namespace fluidcc::models

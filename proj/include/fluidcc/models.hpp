#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fluidcc/dde.hpp"
#include "fluidcc/fairness.hpp"
#include "fluidcc/topology.hpp"

namespace fluidcc::models {

struct Equilibrium {
  std::vector<double> state;
  double residual = 0.0;  // max |rhs| at the point with constant history
};

// ---------------------------------------------------------------------------
// Dual / fair-dual price dynamics

enum class DualVariant { delay_dual = 0, fair_dual = 1 };

/// Price dynamics p' = kappa p^m (D(p(t - tau)) - C [p > 0]) with D(p) = (w/p)^(1/alpha).
struct DualModelParams {
  double kappa = 1.0;
  int m = 1;  // 0: delay dual, 1: fair dual
  double capacity = 1.0;
  double w = 1.0;
  double fairness_alpha = 1.0;
  double tau_f = 0.5;
  double tau_b = 0.5;
  /// Delayed prices are clamped up to this value before entering the demand function.
  double price_floor = 1e-12;

  double tau() const { return tau_f + tau_b; }
  DualVariant variant() const { return m == 0 ? DualVariant::delay_dual : DualVariant::fair_dual; }
  bool operator==(const DualModelParams&) const = default;
};

void validate(const DualModelParams& params);

/// State: {p}; one delay tau; projection floor on p.
dde::DelayedSystem dual_rhs(const DualModelParams& params);
/// Requires m == 1.
dde::DelayedSystem fair_dual_rhs(const DualModelParams& params);
/// p* = w / C^alpha.
Equilibrium dual_equilibrium(const DualModelParams& params);

// ---------------------------------------------------------------------------
// RCP link-rate dynamics

enum class QueueModel { integrating, small_buffer };

struct RcpLinkParams {
  double gain_alpha = 0.1;  // rate-mismatch gain alpha_l (not the fairness exponent)
  double beta = 0.0;        // queue gain beta_l
  double mean_rtt = 1.0;    // d_l

  bool operator==(const RcpLinkParams&) const = default;
};

struct RcpParams {
  std::vector<RcpLinkParams> links;  // one per network link, declaration order
  QueueModel queue = QueueModel::integrating;
  /// Small-buffer map g(rho) = rho^B / (1 - min(rho, 1 - eps)).
  double buffer_exponent = 20.0;
  double buffer_epsilon = 1e-6;
  /// Exponent of the explicit-rate aggregation seen by each flow.
  fairness::FairnessAlpha aggregation = fairness::FairnessAlpha::max_min();

  bool operator==(const RcpParams&) const = default;
};

void validate(const Network& network, const RcpParams& params);

/// g(rho) for the small-buffer queue model.
double small_buffer_queue(double rho, double exponent, double epsilon);

/// State: R_<link> for every link, then q_<link> for every link under the integrating queue model.
/// Delay set: tau_rl + T_jr for every route r, link l on r, link j on r.
dde::DelayedSystem rcp_rhs(const Network& network, const RcpParams& params);

/// Solves for link rates with zero rhs by damped Newton in log R, starting from the water-filling
/// shares. Throws ConvergenceError if no isolated equilibrium is found.
Equilibrium rcp_equilibrium(const Network& network, const RcpParams& params);

/// Single link, single delay, beta = 0: R' = eta R (alpha / (C tau)) (C - R(t - tau)).
struct RcpSingleLinkParams {
  double eta = 1.0;
  double gain_alpha = 1.0;
  double capacity = 1.0;
  double tau = 1.0;  // the constant is the product capacity * tau

  bool operator==(const RcpSingleLinkParams&) const = default;
};

void validate(const RcpSingleLinkParams& params);

/// State: {R}; one delay tau; projection floor on R.
dde::DelayedSystem rcp_single_link_rhs(const RcpSingleLinkParams& params);
Equilibrium rcp_single_link_equilibrium(const RcpSingleLinkParams& params);

// ---------------------------------------------------------------------------
// TCP window dynamics

struct LossModel {
  enum class Kind { constant, small_buffer };
  Kind kind = Kind::constant;
  double probability = 0.01;  // constant loss
  double capacity = 1.0;      // small buffer: p(y) = min(1, (y / C)^B)
  double exponent = 20.0;

  static LossModel constant(double p) { return {Kind::constant, p, 1.0, 20.0}; }
  static LossModel small_buffer(double capacity, double exponent) {
    return {Kind::small_buffer, 0.0, capacity, exponent};
  }

  double operator()(double aggregate_rate) const;
  bool operator==(const LossModel&) const = default;
};

struct TcpParams {
  double rtt = 1.0;
  int n_flows = 1;
  LossModel loss;

  bool operator==(const TcpParams&) const = default;
};

void validate(const TcpParams& params);

/// w' = 1/RTT - (w/2) x(t - RTT) p(t - RTT), x = w/RTT, p = loss(N x).
/// State: {w} (average window of the N flows); one delay RTT.
dde::DelayedSystem tcp_rhs(const TcpParams& params);

/// Solves w*^2 loss(N w*/RTT) = 2.
Equilibrium tcp_equilibrium(const TcpParams& params);

/// Closed form for constant loss: x* = sqrt(2 / p) / RTT.
double tcp_equilibrium_rate(double rtt, double loss_probability);
/// Rate implied by TCP-fair dual pricing, 1 / (tau sqrt(p)). Differs from the fluid model's
/// equilibrium by a factor sqrt(2).
double tcp_fair_dual_rate(double tau, double price);

/// rho = x / C.
double traffic_intensity(double rate, double capacity);

}  // namespace fluidcc::models

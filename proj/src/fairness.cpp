#include "fluidcc/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fluidcc/errors.hpp"
#include "fluidcc/numfmt.hpp"

namespace fluidcc::fairness {

FairnessAlpha::FairnessAlpha(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value))
    throw std::domain_error("fairness alpha must be finite and >= 0 (use max_min() for the limit)");
}

double FairnessAlpha::value() const {
  if (max_min_) throw std::logic_error("max-min fairness has no finite alpha");
  return value_;
}

std::string FairnessAlpha::to_string() const { return max_min_ ? "max-min" : format_double(value_); }

FairnessParams FairnessParams::tcp_fair(const Network& network) {
  FairnessParams p;
  p.alpha = FairnessAlpha(2.0);
  for (const auto& route : network.routes()) {
    const double rtt = route_rtt(route);
    if (!(rtt > 0.0)) throw ValidationError("route " + route.id + ": TCP-fair weights need a positive rtt");
    p.willingness_to_pay.push_back(1.0 / (rtt * rtt));
  }
  return p;
}

FairnessParams FairnessParams::uniform(const Network& network, FairnessAlpha alpha) {
  return FairnessParams{alpha, std::vector<double>(network.routes().size(), 1.0)};
}

double demand(double price, double w, double alpha) {
  if (!(price > 0.0)) throw std::domain_error("demand: price must be positive (clamp it away from 0)");
  if (!(w > 0.0)) throw std::domain_error("demand: willingness to pay must be positive");
  if (!(alpha > 0.0)) throw std::domain_error("demand: alpha must be positive");
  return std::pow(w / price, 1.0 / alpha);
}

double utility(double rate, double w, double alpha) {
  if (alpha == 1.0) return w * std::log(rate);
  return w * std::pow(rate, 1.0 - alpha) / (1.0 - alpha);
}

std::vector<double> link_loads(const Network& network, std::span<const double> rates) {
  std::vector<double> y(network.links().size(), 0.0);
  for (std::size_t r = 0; r < network.routes().size(); ++r)
    for (std::size_t l : network.links_of(r)) y[l] += rates[r];
  return y;
}

double kkt_residual(const Network& network, std::span<const double> rates, std::span<const double> prices) {
  const auto y = link_loads(network, rates);
  double worst = 0.0;
  for (std::size_t l = 0; l < y.size(); ++l) {
    const double c = network.links()[l].capacity;
    worst = std::max(worst, std::max(0.0, y[l] - c) / c);
    if (prices[l] > 0.0) worst = std::max(worst, std::abs(c - y[l]) / c);
  }
  return worst;
}

namespace {

void check_params(const Network& network, const FairnessParams& params) {
  if (params.willingness_to_pay.size() != network.routes().size())
    throw ValidationError("fairness: need one willingness-to-pay value per route");
  for (double w : params.willingness_to_pay)
    if (!(w > 0.0) || !std::isfinite(w)) throw ValidationError("fairness: willingness to pay must be positive");
}

// Price seen by route r excluding link `skip`.
double path_price(const Network& network, std::span<const double> prices, std::size_t r, std::size_t skip) {
  double q = 0.0;
  for (std::size_t j : network.links_of(r))
    if (j != skip) q += prices[j];
  return q;
}

// Solves sum_{r through l} (w_r / (p + q_r))^(1/alpha) = C for p >= 0, the exact minimizer of the
// dual along coordinate l.
double solve_link_price(std::span<const double> w, std::span<const double> q, double capacity, double alpha,
                        double guess) {
  const double inv_alpha = 1.0 / alpha;
  auto load = [&](double p, double* slope) {
    double y = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double x = std::pow(w[i] / (p + q[i]), inv_alpha);
      y += x;
      dy += inv_alpha * x * p / (p + q[i]);  // -dy/dlog p
    }
    if (slope) *slope = dy;
    return y;
  };

  bool all_priced = std::all_of(q.begin(), q.end(), [](double v) { return v > 0.0; });
  if (all_priced && load(0.0, nullptr) <= capacity) return 0.0;

  // Work in u = log p; h(u) = load - C is decreasing.
  double u = guess > 0.0 ? std::log(guess) : 0.0;
  double lo = u, hi = u;
  double step = 1.0;
  while (load(std::exp(lo), nullptr) <= capacity) {
    lo -= step;
    step *= 2.0;
    if (lo < -700.0) return 0.0;
  }
  step = 1.0;
  while (load(std::exp(hi), nullptr) > capacity) {
    hi += step;
    step *= 2.0;
    if (hi > 700.0) throw std::overflow_error("link price exceeds double range");
  }
  u = std::clamp(u, lo, hi);
  for (int it = 0; it < 200; ++it) {
    double slope = 0.0;
    const double h = load(std::exp(u), &slope) - capacity;
    if (h > 0.0)
      lo = u;
    else
      hi = u;
    if (h == 0.0 || hi - lo <= 1e-15 * std::max(1.0, std::abs(u))) break;
    double next = slope > 0.0 ? u + h / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) <= 1e-16 * std::max(1.0, std::abs(u))) break;
    u = next;
  }
  return std::exp(u);
}

std::vector<std::vector<std::string>> binding_links(const Network& network, std::span<const double> prices) {
  std::vector<std::vector<std::string>> out(network.routes().size());
  for (std::size_t r = 0; r < network.routes().size(); ++r)
    for (std::size_t l : network.links_of(r))
      if (prices[l] > 0.0) out[r].push_back(network.links()[l].id);
  return out;
}

}  // namespace

Allocation alpha_fair_allocate(const Network& network, const FairnessParams& params, const AllocateOptions& options) {
  check_params(network, params);
  if (params.alpha.is_max_min()) throw std::invalid_argument("alpha_fair_allocate needs finite alpha; use maxmin_allocate");
  const double alpha = params.alpha.value();
  if (!(alpha > 0.0)) throw std::domain_error("alpha_fair_allocate: alpha must be positive");

  const std::size_t n_links = network.links().size();
  const std::size_t n_routes = network.routes().size();
  const auto& w = params.willingness_to_pay;
  std::vector<double> prices(n_links, 0.0);
  std::vector<double> rates(n_routes, 0.0);

  auto update_rates = [&] {
    for (std::size_t r = 0; r < n_routes; ++r) {
      const double q = path_price(network, prices, r, n_links);
      rates[r] = q > 0.0 ? std::pow(w[r] / q, 1.0 / alpha) : std::numeric_limits<double>::infinity();
    }
  };

  // Gauss-Seidel on the dual: each link price is set to the exact coordinate minimizer.
  std::vector<double> wl, ql;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t sweep = 0;
  for (; sweep < options.max_iterations; ++sweep) {
    for (std::size_t l = 0; l < n_links; ++l) {
      const auto& through = network.routes_through(l);
      if (through.empty()) continue;
      wl.clear();
      ql.clear();
      for (std::size_t r : through) {
        wl.push_back(w[r]);
        ql.push_back(path_price(network, prices, r, l));
      }
      prices[l] = solve_link_price(wl, ql, network.links()[l].capacity, alpha, prices[l]);
    }
    update_rates();
    residual = kkt_residual(network, rates, prices);
    if (residual < options.tolerance) break;
  }
  if (!(residual < options.tolerance))
    throw ConvergenceError("alpha_fair_allocate did not converge (residual " + format_double(residual) + ")", rates,
                           residual);

  Allocation out;
  out.rates = std::move(rates);
  out.bottlenecks = binding_links(network, prices);
  out.link_prices = std::move(prices);
  out.kkt_residual = residual;
  out.iterations = sweep + 1;
  return out;
}

Allocation maxmin_allocate(const Network& network) {
  const std::size_t n_links = network.links().size();
  const std::size_t n_routes = network.routes().size();
  std::vector<double> rates(n_routes, 0.0);
  std::vector<double> remaining(n_links);
  std::vector<bool> frozen(n_routes, false);
  std::vector<bool> saturated(n_links, false);
  for (std::size_t l = 0; l < n_links; ++l) remaining[l] = network.links()[l].capacity;

  std::size_t rounds = 0;
  for (std::size_t left = n_routes; left > 0; ++rounds) {
    // Largest equal increment every unfrozen route can take.
    double step = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> active(n_links, 0);
    for (std::size_t l = 0; l < n_links; ++l) {
      for (std::size_t r : network.routes_through(l))
        if (!frozen[r]) ++active[l];
      if (active[l] > 0) step = std::min(step, remaining[l] / static_cast<double>(active[l]));
    }
    for (std::size_t r = 0; r < n_routes; ++r)
      if (!frozen[r]) rates[r] += step;
    for (std::size_t l = 0; l < n_links; ++l) {
      if (active[l] == 0) continue;
      const double share = remaining[l] / static_cast<double>(active[l]);
      remaining[l] -= step * static_cast<double>(active[l]);
      if (share <= step * (1.0 + 1e-12)) {
        saturated[l] = true;
        remaining[l] = 0.0;
      }
    }
    for (std::size_t l = 0; l < n_links; ++l) {
      if (!saturated[l]) continue;
      for (std::size_t r : network.routes_through(l)) {
        if (!frozen[r]) {
          frozen[r] = true;
          --left;
        }
      }
    }
  }

  Allocation out;
  out.rates = rates;
  out.bottlenecks.resize(n_routes);
  // A saturated link is a bottleneck for r when no other route through it gets more.
  for (std::size_t r = 0; r < n_routes; ++r) {
    for (std::size_t l : network.links_of(r)) {
      if (!saturated[l]) continue;
      double top = 0.0;
      for (std::size_t s : network.routes_through(l)) top = std::max(top, rates[s]);
      if (rates[r] >= top * (1.0 - 1e-12)) out.bottlenecks[r].push_back(network.links()[l].id);
    }
  }
  out.iterations = rounds;
  return out;
}

Allocation allocate(const Network& network, const FairnessParams& params, const AllocateOptions& options) {
  if (params.alpha.is_max_min()) return maxmin_allocate(network);
  return alpha_fair_allocate(network, params, options);
}

double rate_feedback_aggregate(std::span<const double> link_rates, FairnessAlpha alpha) {
  if (link_rates.empty()) throw std::domain_error("rate_feedback_aggregate: no link rates");
  for (double r : link_rates)
    if (!(r > 0.0) || !std::isfinite(r)) throw std::domain_error("rate_feedback_aggregate: link rates must be positive");
  const double smallest = *std::min_element(link_rates.begin(), link_rates.end());
  if (alpha.is_max_min()) return smallest;
  const double a = alpha.value();
  if (!(a > 0.0)) throw std::domain_error("rate_feedback_aggregate: alpha must be positive");
  // Factor out the minimum so large alpha does not overflow.
  double sum = 0.0;
  for (double r : link_rates) sum += std::pow(r / smallest, -a);
  return smallest * std::pow(sum, -1.0 / a);
}

double aggregate_proportional_change(std::span<const double> x, std::span<const double> candidate) {
  std::vector<double> ones(x.size(), 1.0);
  return aggregate_proportional_change(x, candidate, ones);
}

double aggregate_proportional_change(std::span<const double> x, std::span<const double> candidate,
                                     std::span<const double> weights) {
  if (x.size() != candidate.size() || x.size() != weights.size())
    throw std::invalid_argument("aggregate_proportional_change: size mismatch");
  double total = 0.0;
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (!(x[r] > 0.0)) throw std::domain_error("aggregate_proportional_change: rates must be strictly positive");
    total += weights[r] * (candidate[r] - x[r]) / x[r];
  }
  return total;
}

bool check_weighted_proportional_fairness(const Allocation& x, std::span<const double> weights,
                                          const std::vector<std::vector<double>>& candidates, double tolerance) {
  for (const auto& c : candidates)
    if (aggregate_proportional_change(x.rates, c, weights) > tolerance) return false;
  return true;
}

bool check_proportional_fairness(const Allocation& x, const std::vector<std::vector<double>>& candidates,
                                 double tolerance) {
  std::vector<double> ones(x.rates.size(), 1.0);
  return check_weighted_proportional_fairness(x, ones, candidates, tolerance);
}

}  // namespace fluidcc::fairness

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fluidcc/topology.hpp"

namespace fluidcc::fairness {

/// Fairness exponent: a finite alpha >= 0, or the max-min limit (alpha -> infinity).
class FairnessAlpha {
 public:
  constexpr FairnessAlpha() = default;
  explicit FairnessAlpha(double value);
  static constexpr FairnessAlpha max_min() {
    FairnessAlpha a;
    a.max_min_ = true;
    return a;
  }

  bool is_max_min() const noexcept { return max_min_; }
  /// Throws std::logic_error for the max-min value.
  double value() const;
  std::string to_string() const;

  bool operator==(const FairnessAlpha&) const = default;

 private:
  double value_ = 1.0;
  bool max_min_ = false;
};

struct FairnessParams {
  FairnessAlpha alpha{1.0};
  std::vector<double> willingness_to_pay;  // one per route, declaration order

  /// alpha = 2, w_r = 1 / rtt_r^2. Every route needs a positive rtt.
  static FairnessParams tcp_fair(const Network& network);
  /// alpha with unit weights.
  static FairnessParams uniform(const Network& network, FairnessAlpha alpha);
};

struct Allocation {
  std::vector<double> rates;                         // per route
  std::vector<std::vector<std::string>> bottlenecks;  // per route, binding link ids
  std::vector<double> link_prices;                   // empty for water-filling
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
};

/// (w/p)^(1/alpha). Throws std::domain_error unless p, w, alpha are all positive.
double demand(double price, double w, double alpha);

/// Utility with demand() as its inverse marginal: w log x at alpha = 1, w x^(1-alpha)/(1-alpha) otherwise.
double utility(double rate, double w, double alpha);

struct AllocateOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 1'000'000;
};

/// Maximizes sum of alpha-fair utilities subject to A x <= C. Alpha must be finite and positive;
/// use maxmin_allocate for the limit. Throws ConvergenceError with the last rates on failure.
Allocation alpha_fair_allocate(const Network& network, const FairnessParams& params,
                               const AllocateOptions& options = {});

/// Progressive water-filling.
Allocation maxmin_allocate(const Network& network);

/// Dispatches on params.alpha: water-filling for max-min, the price solver otherwise.
Allocation allocate(const Network& network, const FairnessParams& params, const AllocateOptions& options = {});

/// Explicit-rate aggregation of link rates seen by one flow:
/// (sum_j R_j^-alpha)^(-1/alpha), or min_j R_j in the max-min limit.
double rate_feedback_aggregate(std::span<const double> link_rates, FairnessAlpha alpha);

/// Largest relative violation of the KKT conditions for the given link prices and rates.
double kkt_residual(const Network& network, std::span<const double> rates, std::span<const double> prices);

/// sum_r (candidate_r - x_r) / x_r, optionally weighted by w_r.
double aggregate_proportional_change(std::span<const double> x, std::span<const double> candidate);
double aggregate_proportional_change(std::span<const double> x, std::span<const double> candidate,
                                     std::span<const double> weights);

inline constexpr double kProportionalFairnessTolerance = 1e-9;

/// True iff no candidate has positive aggregate proportional change (up to tolerance).
bool check_proportional_fairness(const Allocation& x, const std::vector<std::vector<double>>& candidates,
                                 double tolerance = kProportionalFairnessTolerance);

/// Weighted variant: sum_r w_r (x*_r - x_r)/x_r <= tolerance. This extends the unweighted
/// criterion to arbitrary willingness to pay.
bool check_weighted_proportional_fairness(const Allocation& x, std::span<const double> weights,
                                          const std::vector<std::vector<double>>& candidates,
                                          double tolerance = kProportionalFairnessTolerance);

/// Link loads A x.
std::vector<double> link_loads(const Network& network, std::span<const double> rates);

}  // namespace fluidcc::fairness

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fluidcc {

// Units: rates in packets/second, delays in seconds.

struct Link {
  std::string id;
  double capacity = 0.0;

  bool operator==(const Link&) const = default;
};

struct Route {
  std::string id;
  std::vector<std::string> links;                       // traversal order
  std::map<std::string, double> forward_delay_per_link;  // source -> link
  std::map<std::string, double> return_delay_per_link;   // link -> source
  double forward_delay = 0.0;
  double backward_delay = 0.0;

  bool operator==(const Route&) const = default;
};

double route_rtt(const Route& route);

/// Unvalidated network as read from a scenario.
struct NetworkDescription {
  std::vector<Link> links;
  std::vector<Route> routes;

  bool operator==(const NetworkDescription&) const = default;
};

struct Violation {
  std::string entity;  // e.g. "link L1", "route A"
  std::string rule;

  std::string message() const { return entity + ": " + rule; }
};

std::vector<Violation> validate(const NetworkDescription& description);

/// 0/1 matrix, rows are links and columns are routes, both in declaration order.
class IncidenceMatrix {
 public:
  IncidenceMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  int operator()(std::size_t link, std::size_t route) const { return data_[link * cols_ + route]; }
  void set(std::size_t link, std::size_t route, int value) { data_[link * cols_ + route] = static_cast<std::uint8_t>(value); }

  std::vector<std::vector<int>> to_rows() const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::uint8_t> data_;
};

/// Validated, immutable network. Link and route indices follow declaration order.
class Network {
 public:
  /// Throws ValidationError listing every violation.
  explicit Network(NetworkDescription description);

  const std::vector<Link>& links() const noexcept { return desc_.links; }
  const std::vector<Route>& routes() const noexcept { return desc_.routes; }
  const NetworkDescription& description() const noexcept { return desc_; }

  std::optional<std::size_t> link_index(const std::string& id) const;
  std::optional<std::size_t> route_index(const std::string& id) const;

  /// Link indices of route r in traversal order.
  const std::vector<std::size_t>& links_of(std::size_t route) const { return route_links_[route]; }
  /// Route indices crossing link l in declaration order.
  const std::vector<std::size_t>& routes_through(std::size_t link) const { return link_routes_[link]; }

  double forward_delay(std::size_t route, std::size_t link) const;
  double return_delay(std::size_t route, std::size_t link) const;

 private:
  NetworkDescription desc_;
  std::vector<std::vector<std::size_t>> route_links_;
  std::vector<std::vector<std::size_t>> link_routes_;
};

IncidenceMatrix build_incidence(const Network& network);

/// Fills absent per-link delay maps from the route's scalar forward/backward delays.
void fill_default_link_delays(Route& route);

}  // namespace fluidcc

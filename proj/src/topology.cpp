#include "fluidcc/topology.hpp"

#include <cmath>
#include <set>

#include "fluidcc/errors.hpp"

namespace fluidcc {

double route_rtt(const Route& route) { return route.forward_delay + route.backward_delay; }

std::vector<std::vector<int>> IncidenceMatrix::to_rows() const {
  std::vector<std::vector<int>> out(rows_, std::vector<int>(cols_, 0));
  for (std::size_t l = 0; l < rows_; ++l)
    for (std::size_t r = 0; r < cols_; ++r) out[l][r] = (*this)(l, r);
  return out;
}

namespace {

bool valid_delay(double d) { return std::isfinite(d) && d >= 0.0; }

void check_delay_map(const Route& route, const std::map<std::string, double>& delays, const char* what,
                     std::vector<Violation>& out) {
  const std::string entity = "route " + route.id;
  std::set<std::string> expected(route.links.begin(), route.links.end());
  for (const auto& [link, d] : delays) {
    if (!expected.count(link)) out.push_back({entity, std::string(what) + " has key '" + link + "' not on the route"});
    if (!valid_delay(d)) out.push_back({entity, std::string(what) + " for link '" + link + "' must be >= 0"});
  }
  for (const auto& link : expected) {
    if (!delays.count(link)) out.push_back({entity, std::string(what) + " missing link '" + link + "'"});
  }
}

}  // namespace

std::vector<Violation> validate(const NetworkDescription& description) {
  std::vector<Violation> out;
  if (description.links.empty()) out.push_back({"network", "at least one link required"});
  if (description.routes.empty()) out.push_back({"network", "at least one route required"});

  std::set<std::string> link_ids;
  for (const auto& link : description.links) {
    const std::string entity = "link " + link.id;
    if (link.id.empty()) out.push_back({entity, "id must be nonempty"});
    if (!link_ids.insert(link.id).second) out.push_back({entity, "duplicate link id"});
    if (!(std::isfinite(link.capacity) && link.capacity > 0.0)) out.push_back({entity, "capacity must be positive"});
  }

  std::set<std::string> route_ids;
  for (const auto& route : description.routes) {
    const std::string entity = "route " + route.id;
    if (route.id.empty()) out.push_back({entity, "id must be nonempty"});
    if (!route_ids.insert(route.id).second) out.push_back({entity, "duplicate route id"});
    if (route.links.empty()) out.push_back({entity, "route must traverse at least one link"});
    std::set<std::string> seen;
    for (const auto& l : route.links) {
      if (!link_ids.count(l)) out.push_back({entity, "dangling link reference '" + l + "'"});
      if (!seen.insert(l).second) out.push_back({entity, "link '" + l + "' appears twice"});
    }
    if (!valid_delay(route.forward_delay)) out.push_back({entity, "forward delay must be >= 0"});
    if (!valid_delay(route.backward_delay)) out.push_back({entity, "backward delay must be >= 0"});
    check_delay_map(route, route.forward_delay_per_link, "forward delay map", out);
    check_delay_map(route, route.return_delay_per_link, "return delay map", out);
  }
  return out;
}

Network::Network(NetworkDescription description) : desc_(std::move(description)) {
  auto violations = validate(desc_);
  if (!violations.empty()) {
    std::vector<std::string> details;
    for (const auto& v : violations) details.push_back(v.message());
    const std::string what = "invalid network: " + details.front();
    throw ValidationError(what, std::move(details));
  }
  route_links_.resize(desc_.routes.size());
  link_routes_.resize(desc_.links.size());
  for (std::size_t r = 0; r < desc_.routes.size(); ++r) {
    for (const auto& id : desc_.routes[r].links) {
      const std::size_t l = *link_index(id);
      route_links_[r].push_back(l);
    }
  }
  for (std::size_t l = 0; l < desc_.links.size(); ++l) {
    for (std::size_t r = 0; r < desc_.routes.size(); ++r) {
      for (std::size_t k : route_links_[r])
        if (k == l) link_routes_[l].push_back(r);
    }
  }
}

std::optional<std::size_t> Network::link_index(const std::string& id) const {
  for (std::size_t i = 0; i < desc_.links.size(); ++i)
    if (desc_.links[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> Network::route_index(const std::string& id) const {
  for (std::size_t i = 0; i < desc_.routes.size(); ++i)
    if (desc_.routes[i].id == id) return i;
  return std::nullopt;
}

double Network::forward_delay(std::size_t route, std::size_t link) const {
  return desc_.routes[route].forward_delay_per_link.at(desc_.links[link].id);
}

double Network::return_delay(std::size_t route, std::size_t link) const {
  return desc_.routes[route].return_delay_per_link.at(desc_.links[link].id);
}

IncidenceMatrix build_incidence(const Network& network) {
  IncidenceMatrix a(network.links().size(), network.routes().size());
  for (std::size_t r = 0; r < network.routes().size(); ++r)
    for (std::size_t l : network.links_of(r)) a.set(l, r, 1);
  return a;
}

void fill_default_link_delays(Route& route) {
  if (route.forward_delay_per_link.empty())
    for (const auto& l : route.links) route.forward_delay_per_link[l] = route.forward_delay;
  if (route.return_delay_per_link.empty())
    for (const auto& l : route.links) route.return_delay_per_link[l] = route.backward_delay;
}

}  // namespace fluidcc

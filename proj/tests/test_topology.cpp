#include "doctest.h"
#include "fluidcc/errors.hpp"
#include "fluidcc/topology.hpp"

using namespace fluidcc;

namespace {

Route route(std::string id, std::vector<std::string> links, double tf = 0.0, double tb = 0.0) {
  Route r;
  r.id = std::move(id);
  r.links = std::move(links);
  r.forward_delay = tf;
  r.backward_delay = tb;
  fill_default_link_delays(r);
  return r;
}

}  // namespace

TEST_CASE("incidence of a single link and route") {
  Network net({{{"L", 1.0}}, {route("A", {"L"})}});
  CHECK(build_incidence(net).to_rows() == std::vector<std::vector<int>>{{1}});
}

TEST_CASE("incidence follows declaration order") {
  Network net({{{"L1", 1.0}, {"L2", 1.0}}, {route("A", {"L1"}), route("B", {"L1", "L2"})}});
  CHECK(build_incidence(net).to_rows() == std::vector<std::vector<int>>{{1, 1}, {0, 1}});
}

TEST_CASE("disjoint single-link routes give the identity") {
  Network net({{{"a", 1}, {"b", 2}, {"c", 3}}, {route("r1", {"a"}), route("r2", {"b"}), route("r3", {"c"})}});
  CHECK(build_incidence(net).to_rows() == std::vector<std::vector<int>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
}

TEST_CASE("incidence column sums equal route lengths") {
  Network net({{{"L1", 1}, {"L2", 1}, {"L3", 1}},
               {route("A", {"L1", "L2", "L3"}), route("B", {"L2"}), route("C", {"L3", "L1"})}});
  const auto a = build_incidence(net);
  for (std::size_t r = 0; r < a.cols(); ++r) {
    int sum = 0;
    for (std::size_t l = 0; l < a.rows(); ++l) sum += a(l, r);
    CHECK(sum == static_cast<int>(net.routes()[r].links.size()));
  }
}

TEST_CASE("route rtt sums forward and backward delay") {
  CHECK(route_rtt(route("A", {"L"}, 0.6, 0.4)) == doctest::Approx(1.0));
  CHECK(route_rtt(route("A", {"L"}, 0.0, 0.0)) == 0.0);
  CHECK(route_rtt(route("A", {"L"}, 0.25, 0.75)) == 1.0);
  // commutes
  CHECK(route_rtt(route("A", {"L"}, 0.3, 0.9)) == route_rtt(route("A", {"L"}, 0.9, 0.3)));
}

TEST_CASE("validate reports violations as data") {
  SUBCASE("well formed") {
    NetworkDescription d{{{"L1", 1}, {"L2", 2}}, {route("A", {"L1", "L2"})}};
    CHECK(validate(d).empty());
    CHECK(validate(Network(d).description()).empty());
  }
  SUBCASE("zero capacity") {
    NetworkDescription d{{{"L1", 0}}, {route("A", {"L1"})}};
    const auto v = validate(d);
    REQUIRE(v.size() == 1);
    CHECK(v[0].entity == "link L1");
    CHECK(v[0].rule == "capacity must be positive");
  }
  SUBCASE("dangling link") {
    Route r = route("A", {"L1"});
    r.links.push_back("nope");
    NetworkDescription d{{{"L1", 1}}, {r}};
    const auto v = validate(d);
    REQUIRE(!v.empty());
    CHECK(v[0].entity == "route A");
    CHECK(v[0].rule.find("dangling link reference") != std::string::npos);
  }
  SUBCASE("delay maps must cover exactly the route's links") {
    Route r = route("A", {"L1"});
    r.forward_delay_per_link["L2"] = 0.1;
    r.return_delay_per_link["L1"] = -1.0;
    NetworkDescription d{{{"L1", 1}, {"L2", 1}}, {r}};
    CHECK(validate(d).size() == 2);
  }
  SUBCASE("empty network") { CHECK(validate(NetworkDescription{}).size() == 2); }
}

TEST_CASE("network constructor rejects invalid descriptions") {
  NetworkDescription d{{{"L1", -1}}, {route("A", {"L1"})}};
  CHECK_THROWS_AS(Network{d}, ValidationError);
}

TEST_CASE("per-link delays default from the scalar pair") {
  Network net({{{"L1", 1}, {"L2", 1}}, {route("A", {"L1", "L2"}, 0.2, 0.3)}});
  CHECK(net.forward_delay(0, 1) == 0.2);
  CHECK(net.return_delay(0, 0) == 0.3);
  CHECK(net.routes_through(1) == std::vector<std::size_t>{0});
}

#include <doctest.h>

#include <cmath>
#include <vector>

#include "twoflow/network.hpp"

using namespace twoflow;
using doctest::Approx;

namespace {

const FdConfig kFd = FdConfig::motorway();
const MicroConfig kMicro = MicroConfig::motorway();
const CouplingSchedule kSchedule{2.0 / 3600, 0.1 / 3600};

Road road(std::string id, double len, TwoClassState init = {}) {
  return Road{std::move(id), RoadGrid::uniform(len, 0.1, init), 2, 1};
}

Network merge_net(double len = 2.0) {
  Network n;
  n.roads = {road("in1", len), road("in2", len), road("out", len)};
  n.junctions = {Junction{Junction::Kind::Merge, {0, 1}, {2}, 0.5, {1, 0}, {1, 0}}};
  n.paths = {{0, 2}, {1, 2}};
  return n;
}

Network diverge_net(std::array<double, 2> theta) {
  Network n;
  n.roads = {road("in", 2.0), road("a", 2.0), road("b", 2.0)};
  n.junctions = {Junction{Junction::Kind::Diverge, {0}, {1, 2}, 0.5, theta, theta}};
  n.paths = {{0, 1}, {0, 2}};
  return n;
}

std::vector<MultiscaleState> states(const Network& n) {
  std::vector<MultiscaleState> s;
  for (const auto& r : n.roads) s.push_back(MultiscaleState{r.grid, {}, {}, 0.0});
  return s;
}

std::vector<MultiscaleSolver> solvers(std::size_t n) {
  return std::vector<MultiscaleSolver>(n, MultiscaleSolver(kFd, kMicro, kSchedule, 0.1));
}

}  // namespace

TEST_CASE("merge allocation") {
  auto q = network::merge_allocation(900, 900, 1500, 0.5);
  CHECK(q[0] == Approx(750));
  CHECK(q[1] == Approx(750));
  q = network::merge_allocation(100, 200, 1500, 0.5);
  CHECK(q[0] == 100);
  CHECK(q[1] == 200);
  // The unused priority share of a weak road goes to the other one.
  q = network::merge_allocation(300, 1400, 1500, 0.5);
  CHECK(q[0] == Approx(300));
  CHECK(q[1] == Approx(1200));
  q = network::merge_allocation(900, 900, 1500, 0.8);
  CHECK(q[0] == Approx(900));
  CHECK(q[1] == Approx(600));
  CHECK(q[0] + q[1] <= 1500 + 1e-9);
}

TEST_CASE("diverge total") {
  CHECK(network::diverge_total(1000, 800, 5000, 1, 0) == Approx(800));
  CHECK(network::diverge_total(1000, 5000, 5000, 1, 0) == Approx(1000));
  CHECK(network::diverge_total(1000, 300, 5000, 0.5, 0.5) == Approx(600));
}

TEST_CASE("junction fluxes balance exactly") {
  const TwoClassState a{60, 10}, b{30, 20}, c{150, 5};
  const Endpoint up[] = {{a, &kFd}, {b, &kFd}};
  const Endpoint down[] = {{c, &kFd}};
  const auto m = merge_net().junctions[0];
  auto f = network::junction_fluxes(m, up, down);
  CHECK(f.incoming[0].L + f.incoming[1].L == f.outgoing[0].L);
  CHECK(f.incoming[0].H + f.incoming[1].H == f.outgoing[0].H);

  const auto d = diverge_net({0.3, 0.7}).junctions[0];
  const Endpoint up1[] = {{a, &kFd}};
  const Endpoint down2[] = {{b, &kFd}, {c, &kFd}};
  f = network::junction_fluxes(d, up1, down2);
  CHECK(f.incoming[0].L == f.outgoing[0].L + f.outgoing[1].L);
  CHECK(f.incoming[0].H == f.outgoing[0].H + f.outgoing[1].H);
  CHECK(f.outgoing[0].L == Approx(0.3 * f.incoming[0].L));
}

TEST_CASE("closed network conserves mass over 10^4 steps") {
  auto net = merge_net();
  for (auto& r : net.roads)
    for (std::size_t i = 0; i < r.grid.n_cells(); ++i) r.grid.cells[i] = {40.0 + 3.0 * i, 5.0 + (i % 7)};
  net.roads[0].grid.left_bc = net.roads[1].grid.left_bc = BoundaryCondition::closed();
  net.roads[2].grid.right_bc = BoundaryCondition::closed();
  const std::vector<FdConfig> fds(3, kFd);
  auto mass = [&] {
    double l = 0, h = 0;
    for (const auto& r : net.roads) {
      l += r.grid.mass_L();
      h += r.grid.mass_H();
    }
    return std::pair{l, h};
  };
  const auto [l0, h0] = mass();
  std::vector<CtmSolver> solve(3, CtmSolver(kFd, 2.6 / 3600, 0.1));
  for (int k = 0; k < 10000; ++k) {
    network::apply_junctions(net, fds);
    for (std::size_t r = 0; r < 3; ++r) solve[r].step(net.roads[r].grid);
  }
  const auto [l1, h1] = mass();
  CHECK(std::abs(l1 - l0) <= 1e-10 * l0);
  CHECK(std::abs(h1 - h0) <= 1e-10 * h0);
}

TEST_CASE("path decomposition") {
  auto net = diverge_net({1, 0});
  for (auto& r : net.roads) r.grid.cells.assign(r.grid.n_cells(), {100, 10});
  auto pd = network::decompose_paths(net);
  CHECK(pd.fields[0][0][3].rho_L == 100);
  CHECK(pd.fields[0][1][3].rho_L == 0);

  net = diverge_net({0.5, 0.5});
  for (auto& r : net.roads) r.grid.cells.assign(r.grid.n_cells(), {100, 10});
  pd = network::decompose_paths(net);
  CHECK(pd.fields[0][0][3].rho_L == 50);
  CHECK(pd.fields[0][1][3].rho_L == 50);

  net = diverge_net({0.3, 0.7});
  for (auto& r : net.roads)
    for (std::size_t i = 0; i < r.grid.n_cells(); ++i) r.grid.cells[i] = {7.3 * i, 0.41 * i};
  const auto back = network::recombine(network::decompose_paths(net));
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t i = 0; i < net.roads[r].grid.n_cells(); ++i) {
      CHECK(back[r][i].rho_L == Approx(net.roads[r].grid.cells[i].rho_L).epsilon(1e-14));
      CHECK(back[r][i].rho_H == Approx(net.roads[r].grid.cells[i].rho_H).epsilon(1e-14));
    }

  auto m = merge_net();
  for (auto& r : m.roads) r.grid.cells.assign(r.grid.n_cells(), {80, 8});
  pd = network::decompose_paths(m);
  CHECK(pd.fields[2][0][0].rho_L == Approx(40));
  CHECK(pd.fields[0][0][0].rho_L == 80);
  CHECK(pd.fields[0][1][0].rho_L == 0);
}

TEST_CASE("network validation") {
  auto n = merge_net();
  CHECK_NOTHROW(n.validate());
  n.junctions[0].incoming = {0};
  CHECK_THROWS_AS(n.validate(), ConfigError);
  n = diverge_net({0.6, 0.6});
  CHECK_THROWS_AS(n.validate(), ConfigError);
  n = merge_net();
  n.roads[0].truck_lanes = 2;
  CHECK_THROWS_AS(n.validate(), ConfigError);
  n = merge_net();
  n.paths = {{0, 1}};
  CHECK_THROWS_AS(n.validate(), ConfigError);
  CHECK(merge_net().road_index("out") == 2u);
  CHECK_FALSE(merge_net().road_index("nope"));
}

TEST_CASE("lane generalization") {
  const auto two = network::lane_generalization(kFd, 2, 1);
  CHECK(two.rho_L_max == Approx(kFd.rho_L_max));
  CHECK(two.transition_level == Approx(kFd.transition_level));
  CHECK(two.f_L_peak_free == Approx(kFd.f_L_peak_free));
  const auto three = network::lane_generalization(kFd, 3, 1);
  CHECK(three.transition_level == Approx(2.0 / 3.0 * three.rho_L_max));
  CHECK(three.rho_L_max == Approx(3 / 0.0075));
  CHECK_THROWS_AS(network::lane_generalization(kFd, 2, 2), ConfigError);
  CHECK_THROWS_AS(network::lane_generalization(kFd, 2, 0), ConfigError);
}

TEST_CASE("truck transfer") {
  const auto net = merge_net();
  auto s = states(net);
  auto sol = solvers(3);
  s[0].fleet.trucks = {{5, net.roads[0].grid.length_km + 0.001, 90, 0, 0}};
  auto rep = network::transfer_trucks(net, s, sol, 0.0);
  REQUIRE(rep.moved.size() == 1);
  CHECK(rep.moved[0].to == 2);
  CHECK(s[2].fleet.trucks.front().x_km == 0.0);
  CHECK(s[2].fleet.trucks.front().road == 2);
  CHECK(s[0].fleet.empty());

  // Destination's rear truck too close: hold with V = 0 at the road end.
  s[2].fleet.trucks.front().x_km = 0.01;
  s[1].fleet.trucks = {{6, net.roads[1].grid.length_km + 0.002, 90, 1, 1}};
  rep = network::transfer_trucks(net, s, sol, 0.0);
  CHECK(rep.moved.empty());
  REQUIRE(rep.held.size() == 1);
  CHECK(s[1].fleet.trucks.back().v_kmh == 0.0);
  CHECK(s[1].fleet.trucks.back().x_km < net.roads[1].grid.length_km);
}

TEST_CASE("simultaneous arrivals at a merge resolve by road, then truck id") {
  const auto net = merge_net();
  for (auto [id0, id1] : {std::pair<TruckId, TruckId>{1, 2}, std::pair<TruckId, TruckId>{2, 1}}) {
    auto s = states(net);
    auto sol = solvers(3);
    s[0].fleet.trucks = {{id0, 2.0005, 90, 0, 0}};
    s[1].fleet.trucks = {{id1, 2.0005, 90, 1, 1}};
    const auto rep = network::transfer_trucks(net, s, sol, 0.0);
    REQUIRE(rep.moved.size() == 1);
    CHECK(rep.moved[0].from == 0);
    CHECK(rep.moved[0].truck == id0);
    CHECK(rep.held == std::vector<TruckId>{id1});
  }
}

TEST_CASE("trucks leave roads without a downstream junction") {
  const auto net = merge_net();
  auto s = states(net);
  auto sol = solvers(3);
  s[2].fleet.trucks = {{1, 1.0, 90, 2, 0}, {2, 2.01, 90, 2, 0}};
  const auto rep = network::transfer_trucks(net, s, sol, 0.0);
  CHECK(rep.exited == std::vector<TruckId>{2});
  CHECK(s[2].fleet.size() == 1);
}

TEST_CASE("diverge destination follows the truck's path") {
  const auto net = diverge_net({0.5, 0.5});
  CHECK(network::destination(net, 0, Truck{0, 2.0, 0, 0, 1}) == 2u);
  CHECK(network::destination(net, 0, Truck{0, 2.0, 0, 0, 0}) == 1u);
  CHECK_FALSE(network::destination(net, 1, Truck{}));
}

TEST_CASE("front truck follows the destination's rear truck") {
  const auto net = merge_net();
  auto s = states(net);
  s[0].fleet.trucks = {{1, 1.9, 90, 0, 0}};
  s[2].fleet.trucks = {{2, 0.02, 10, 2, 0}};
  network::set_downstream_obstacles(net, s);
  REQUIRE(s[0].fleet.downstream);
  CHECK(s[0].fleet.downstream->x_km == Approx(2.02));
  CHECK_FALSE(s[1].fleet.downstream);
}

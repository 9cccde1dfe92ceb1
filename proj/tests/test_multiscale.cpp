#include <doctest.h>

#include <cmath>
#include <vector>

#include "twoflow/multiscale.hpp"

using namespace twoflow;
using doctest::Approx;

namespace {

const FdConfig kFd = FdConfig::motorway();
const MicroConfig kMicro = MicroConfig::motorway();
const CouplingSchedule kSchedule{2.0 / 3600, 0.1 / 3600};

Fleet platoon(const std::vector<double>& xs, double v) {
  Fleet f;
  TruckId id = 0;
  for (double x : xs) f.trucks.push_back({id++, x, v, 0, 0});
  return f;
}

MultiscaleState state(double length, double rho_L, Fleet fleet = {}) {
  MultiscaleState s;
  s.grid = RoadGrid::uniform(length, 0.1, {rho_L, 0});
  s.fleet = std::move(fleet);
  return s;
}

}  // namespace

TEST_CASE("effective density from window counts") {
  auto grid = RoadGrid::uniform(2.0, 0.1);
  auto eff = multiscale::effective_density(Fleet{}, grid, 0.05, kFd);
  for (double e : eff) CHECK(e == 0.0);

  eff = multiscale::effective_density(platoon({1.01, 1.04}, 0), grid, 0.05, kFd);
  CHECK(eff[10] == Approx(20));

  // Bumper to bumper at delta_close: 4 trucks per 0.1 km window.
  std::vector<double> xs;
  for (int k = 0; k < 40; ++k) xs.push_back(0.5 + 0.025 * k);
  eff = multiscale::effective_density(platoon(xs, 0), grid, 0.05, kFd);
  CHECK(eff[10] == Approx(40));
  CHECK(eff[10] <= kFd.rho_H_max);

  xs.clear();
  for (int k = 0; k < 10; ++k) xs.push_back(1.0 + 0.009 * k);
  eff = multiscale::effective_density(platoon(xs, 0), grid, 0.05, kFd);
  CHECK(eff[10] == Approx(kFd.rho_H_max));
}

TEST_CASE("entry gate") {
  CHECK(multiscale::entry_gate(0.0, 1, 0.05, kFd));
  CHECK_FALSE(multiscale::entry_gate(260, 1, 0.05, kFd));
  CHECK(multiscale::entry_gate(50, 1, 0.05, kFd));
  CHECK(fd::rho_star_L(20, kFd) == Approx(218.67).epsilon(1e-4));
}

TEST_CASE("coupling windows containing a point") {
  const auto grid = RoadGrid::uniform(2.0, 0.1);
  auto [a, b] = multiscale::windows_containing(grid, 1.02, 0.05);
  CHECK(a == 10);
  CHECK(b == 11);
  // Exactly on a cell boundary the point sits in the upper cell's window only.
  std::tie(a, b) = multiscale::windows_containing(grid, 1.0, 0.05);
  CHECK(b - a == 1);
  for (double x = 0.0; x < 2.0; x += 0.00731) {
    std::tie(a, b) = multiscale::windows_containing(grid, x, 0.05);
    CHECK(b - a == 1);
    CHECK(grid.cell_center_km(a) - 0.05 <= x);
    CHECK(x < grid.cell_center_km(a) + 0.05);
  }
}

TEST_CASE("substep count must be integral") {
  CHECK(kSchedule.substeps() == 20);
  CHECK_THROWS_AS((CouplingSchedule{2.05 / 3600, 0.1 / 3600}.substeps()), ConfigError);
  CHECK_THROWS_AS((CouplingSchedule{0.0, 0.1 / 3600}.substeps()), ConfigError);
}

TEST_CASE("without trucks the car field matches the macro solver bit for bit") {
  auto ms = state(5.0, 20);
  for (std::size_t i = 20; i < 30; ++i) ms.grid.cells[i].rho_L = 180;
  ms.grid.left_bc = BoundaryCondition::dirichlet({20, 0});
  auto ref = ms.grid;
  MultiscaleSolver solver(kFd, kMicro, kSchedule, 0.1);
  CtmSolver cars(kFd, kSchedule.macro_dt_h, 0.1, MacroOptions{true, false});
  for (int k = 0; k < 200; ++k) {
    solver.step(ms);
    cars.step(ref);
  }
  for (std::size_t i = 0; i < ref.n_cells(); ++i) CHECK(ms.grid.cells[i].rho_L == ref.cells[i].rho_L);
}

TEST_CASE("closed road: car mass exact, no truck lost, states admissible") {
  std::vector<double> xs;
  for (int k = 0; k < 30; ++k) xs.push_back(0.2 + 0.06 * k);
  auto ms = state(6.0, 30, platoon(xs, 90));
  for (std::size_t i = 30; i < 40; ++i) ms.grid.cells[i].rho_L = 250;
  ms.grid.left_bc = ms.grid.right_bc = BoundaryCondition::closed();
  MultiscaleSolver solver(kFd, kMicro, kSchedule, 0.1);
  solver.refresh(ms);
  const double m0 = ms.grid.mass_L();
  std::size_t holds = 0;
  for (int k = 0; k < 300; ++k) {
    const auto rep = solver.step(ms);
    holds += rep.holds.size();
    REQUIRE(ms.fleet.size() == 30);
    CHECK(ms.fleet.ordered());
    for (std::size_t i = 0; i < ms.grid.n_cells(); ++i)
      CHECK(fd::in_domain({ms.grid.cells[i].rho_L, ms.effective_rho_H[i]}, kFd));
  }
  CHECK(std::abs(ms.grid.mass_L() - m0) <= 1e-10 * m0);
  // Trucks reaching the dense block had to wait at its edge.
  CHECK(holds > 0);
}

TEST_CASE("registry lists every truck once, in its cell") {
  auto ms = state(2.0, 10, platoon({0.05, 0.31, 0.35, 1.99}, 0));
  MultiscaleSolver solver(kFd, kMicro, kSchedule, 0.1);
  solver.refresh(ms);
  std::size_t n = 0;
  for (std::size_t i = 0; i < ms.grid.n_cells(); ++i)
    for (auto id : ms.grid.truck_registry[i]) {
      ++n;
      const auto& t = ms.fleet.trucks[id];
      CHECK(ms.grid.cell_of(t.x_km) == i);
    }
  CHECK(n == 4);
  CHECK(ms.grid.truck_registry[3].size() == 2);
}

TEST_CASE("insertion at the entrance") {
  MultiscaleSolver solver(kFd, kMicro, kSchedule, 0.1);
  auto ms = state(2.0, 10);
  solver.refresh(ms);
  CHECK(solver.try_insert(ms, Truck{7, 0.0, 90.0, 0, 0}));
  REQUIRE(ms.fleet.size() == 1);
  CHECK(ms.fleet.trucks[0].x_km == 0.0);
  // Headway: the last truck is still within delta_close of the entrance.
  ms.fleet.trucks[0].x_km = 0.01;
  CHECK_FALSE(solver.try_insert(ms, Truck{8, 0.0, 90.0, 0, 0}));
  ms.fleet.trucks[0].x_km = 0.5;
  CHECK(solver.try_insert(ms, Truck{8, 0.0, 90.0, 0, 0}));
  // Gate: cars too dense at the entrance.
  auto dense = state(2.0, 260);
  solver.refresh(dense);
  CHECK_FALSE(solver.try_insert(dense, Truck{9, 0.0, 90.0, 0, 0}));
  CHECK(dense.fleet.empty());
}

TEST_CASE("trucks slow cars to the jammed free speed") {
  std::vector<double> xs;
  for (int k = 0; k < 60; ++k) xs.push_back(1.0 + 0.015 * k);
  auto ms = state(4.0, 10, platoon(xs, 0));
  for (auto& t : ms.fleet.trucks) ms.fleet.scripts[t.id] = SpeedProfile{{0.0}, {0.0}};
  MultiscaleSolver solver(kFd, kMicro, kSchedule, 0.1);
  solver.refresh(ms);
  const std::size_t i = ms.grid.cell_of(1.5);
  CHECK(ms.effective_rho_H[i] == Approx(kFd.rho_H_max));
  CHECK(fd::v_L({10, ms.effective_rho_H[i]}, kFd) == Approx(65));
}

TEST_CASE("solver rejects mismatched micro step") {
  auto m = kMicro;
  m.euler_dt_h = 0.2 / 3600;
  CHECK_THROWS_AS(MultiscaleSolver(kFd, m, kSchedule, 0.1), ConfigError);
}

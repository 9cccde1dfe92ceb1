#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "twoflow/ctm.hpp"
#include "twoflow/validation.hpp"

using namespace twoflow;
using doctest::Approx;

namespace {

const FdConfig kFd = FdConfig::motorway();
constexpr double kS = 1.0 / 3600.0;

double f200() { return fd::f_L({200, 0}, kFd); }

}  // namespace

TEST_CASE("sending and receiving functions") {
  auto sr = ctm::sending_receiving_L({20, 0}, kFd);
  CHECK(sr.send == Approx(2600));
  CHECK(sr.receive == Approx(4200));
  sr = ctm::sending_receiving_L({fd::sigma_L(0, kFd), 0}, kFd);
  CHECK(sr.send == Approx(4200));
  CHECK(sr.receive == Approx(4200));
  sr = ctm::sending_receiving_L({200, 0}, kFd);
  CHECK(sr.send == Approx(4200));
  CHECK(sr.receive == Approx(1194.75).epsilon(1e-4));
  CHECK(sr.receive == Approx(f200()));

  const auto h = ctm::sending_receiving_H({10, 8}, kFd);
  CHECK(h.send == Approx(720));
  CHECK(h.receive == Approx(1500));
}

TEST_CASE("interface flux is the minimum of demand and supply") {
  const TwoClassState u{10, 13};
  const auto f = ctm::interface_flux(u, u, kFd);
  CHECK(f.L == Approx(fd::f_L(u, kFd)));
  CHECK(f.H == Approx(fd::f_H(u, kFd)));
  CHECK(ctm::interface_flux({20, 0}, {fd::rho_star_L(0, kFd), 0}, kFd).L == 0.0);
  CHECK(ctm::interface_flux({20, 0}, {200, 0}, kFd).L == Approx(f200()));
}

TEST_CASE("CFL bound at dx = 100 m") {
  const double dt = ctm::max_stable_dt_h(0.1, kFd);
  CHECK(dt / kS == Approx(0.1 / 130 * 3600).epsilon(1e-9));
  CHECK(dt / kS == Approx(2.769).epsilon(1e-3));
  const auto g = RoadGrid::uniform(1.0, 0.1);
  CHECK(ctm::cfl_check(g, 2.6 * kS, kFd));
  CHECK_FALSE(ctm::cfl_check(g, 3.0 * kS, kFd));
  CHECK(ctm::cfl_check(g, 0.0, kFd));
  CHECK_THROWS_AS(CtmSolver(kFd, 3.0 * kS, 0.1), CflError);
  try {
    CtmSolver(kFd, 3.0 * kS, 0.1);
  } catch (const CflError& e) {
    CHECK(e.max_dt_h() == Approx(dt));
  }
}

TEST_CASE("grid construction") {
  auto g = RoadGrid::uniform(10.0, 0.1);
  CHECK(g.n_cells() == 100);
  CHECK(g.cell_center_km(0) == Approx(0.05));
  CHECK(g.cell_of(0.0) == 0);
  CHECK(g.cell_of(9.99) == 99);
  CHECK(g.cell_of(12.0) == 99);
  CHECK(g.truck_registry.size() == 100);
  CHECK_THROWS_AS(RoadGrid::uniform(10.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(RoadGrid::uniform(0.01, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(RoadGrid::uniform(10.0, 1e-9), std::invalid_argument);
}

TEST_CASE("uniform states are stationary") {
  for (TwoClassState u : {TwoClassState{10, 13}, TwoClassState{186, 8}, TwoClassState{60, 40}}) {
    auto g = RoadGrid::uniform(5.0, 0.1, u);
    g.left_bc = g.right_bc = BoundaryCondition::dirichlet(u);
    CtmSolver s(kFd, 2.6 * kS, 0.1);
    for (int k = 0; k < 50; ++k) s.step(g);
    for (const auto& c : g.cells) {
      CHECK(std::abs(c.rho_L - u.rho_L) < 1e-12);
      CHECK(std::abs(c.rho_H - u.rho_H) < 1e-12);
    }
  }
}

TEST_CASE("closed road conserves both masses") {
  const auto r = check_conservation(kFd, 0.1, 10000);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("Riemann oracles") {
  const auto shock = check_riemann_shock(kFd, 0.1);
  INFO(shock.detail);
  CHECK(shock.passed);
  const auto fan = check_riemann_rarefaction(kFd, 0.1);
  INFO(fan.detail);
  CHECK(fan.passed);
  // Rankine-Hugoniot arithmetic for the 20 | 200 jump.
  CHECK((f200() - 2600) / 180 == Approx(-7.81).epsilon(1e-3));
}

TEST_CASE("boundary conditions") {
  auto g = RoadGrid::uniform(1.0, 0.1, {10, 5});
  g.left_bc = BoundaryCondition::inflow(500, 100);
  CHECK(ctm::left_boundary_flux(g, kFd).L == Approx(500));
  g.left_bc = BoundaryCondition::inflow(9000, 100);
  CHECK(ctm::left_boundary_flux(g, kFd).L == Approx(ctm::sending_receiving_L(g.cells[0], kFd).receive));
  g.left_bc = BoundaryCondition::closed();
  CHECK(ctm::left_boundary_flux(g, kFd).L == 0.0);
  g.right_bc = BoundaryCondition::inflow(1, 1);
  CHECK_THROWS_AS(ctm::right_boundary_flux(g, kFd), std::invalid_argument);
  g.right_bc = BoundaryCondition::free_outflow();
  CHECK(ctm::right_boundary_flux(g, kFd).L == Approx(fd::f_L(g.cells.back(), kFd)));
  g.right_bc = BoundaryCondition::dirichlet({fd::rho_star_L(0, kFd), 0});
  CHECK(ctm::right_boundary_flux(g, kFd).L == 0.0);
}

TEST_CASE("a jammed right end fills the road from downstream") {
  auto g = RoadGrid::uniform(2.0, 0.1, {20, 0});
  g.left_bc = BoundaryCondition::dirichlet({20, 0});
  g.right_bc = BoundaryCondition::closed();
  CtmSolver s(kFd, 2.6 * kS, 0.1);
  const double m0 = g.mass_L();
  for (int k = 0; k < 100; ++k) {
    const auto rep = s.step(g);
    CHECK(rep.total_mass_L >= m0);
    for (const auto& c : g.cells) CHECK(fd::in_domain(c, kFd));
  }
  CHECK(g.cells.back().rho_L > 200);
}

TEST_CASE("solver checks the grid spacing") {
  auto g = RoadGrid::uniform(1.0, 0.05);
  CtmSolver s(kFd, 1.0 * kS, 0.1);
  CHECK_THROWS_AS(s.step(g), std::invalid_argument);
}

TEST_CASE("frozen class stays put") {
  auto g = RoadGrid::uniform(2.0, 0.1, {10, 5});
  for (std::size_t i = 10; i < 20; ++i) g.cells[i] = {100, 20};
  const auto before = g.cells;
  macro_step(g, 2.0 * kS, kFd, MacroOptions{true, false, Exec::Serial});
  for (std::size_t i = 0; i < g.n_cells(); ++i) CHECK(g.cells[i].rho_H == before[i].rho_H);
}

#include <doctest.h>

#include <cmath>
#include <vector>

#include "twoflow/ftl.hpp"
#include "twoflow/validation.hpp"

using namespace twoflow;
using doctest::Approx;

namespace {

const FdConfig kFd = FdConfig::motorway();
const MicroConfig kMicro = MicroConfig::motorway();

Fleet platoon(std::vector<double> xs, double v) {
  Fleet f;
  TruckId id = 0;
  for (double x : xs) f.trucks.push_back({id++, x, v, 0, 0});
  return f;
}

std::vector<double> empty_road(std::size_t n) { return std::vector<double>(n, 0.0); }

}  // namespace

TEST_CASE("equilibrium speed") {
  CHECK(ftl::v_zz(0.020, 0.025, 0.050, 90) == 0.0);
  CHECK(ftl::v_zz(0.025, 0.025, 0.050, 90) == 0.0);
  CHECK(ftl::v_zz(0.0375, 0.025, 0.050, 90) == Approx(45));
  CHECK(ftl::v_zz(0.100, 0.025, 0.050, 90) == 90.0);
  CHECK(ftl::v_zz(0.050, 0.025, 0.050, 90) == 90.0);
}

TEST_CASE("acceleration branches") {
  CHECK(ftl::acceleration(0.0, 0.2, 90, 10, kMicro, kFd) == 0.0);
  CHECK(ftl::acceleration(0.0, 0.02, 90, 10, kMicro, kFd) == Approx(-450000));
  CHECK(ftl::acceleration(0.0, 0.2, 0, 10, kMicro, kFd) == Approx(6428.571).epsilon(1e-6));
  CHECK_THROWS_AS(ftl::acceleration(1.0, 1.0, 0, 0, kMicro, kFd), CollisionError);
  CHECK_THROWS_AS(ftl::acceleration(1.0, 0.9, 0, 0, kMicro, kFd), CollisionError);
}

TEST_CASE("coupled gaps") {
  auto m = kMicro;
  auto g = ftl::coupled_gaps(50, 0.05, m, kFd);
  CHECK(g.delta_close_km == 0.025);
  CHECK(g.delta_far_km == 0.050);
  g = ftl::coupled_gaps(0, 0.05, m, kFd);
  CHECK(g.delta_close_km == 0.025);
  m.coupling_slope_km = 1e-3;
  g = ftl::coupled_gaps(200, 0.05, m, kFd);
  CHECK(g.delta_close_km == Approx(0.025 + 1e-3 * 10));
  CHECK(g.delta_far_km == Approx(0.050 + 1e-3 * 10));
  CHECK(g.delta_close_km < g.delta_far_km);
  // Below the transition level the slope has no effect.
  g = ftl::coupled_gaps(100, 0.05, m, kFd);
  CHECK(g.delta_close_km == 0.025);
  // With slope 0 nothing changes anywhere.
  g = ftl::coupled_gaps(250, 0.05, kMicro, kFd);
  CHECK(g.delta_close_km == 0.025);
}

TEST_CASE("window count is half-open") {
  const std::vector<double> xs{1.00, 1.03, 1.08};
  CHECK(ftl::count_window(xs, 1.02, 0.05) == 2);
  CHECK(ftl::count_window(std::vector<double>{}, 1.0, 0.05) == 0);
  CHECK(ftl::count_window(std::vector<double>{1.05}, 1.0, 0.05) == 0);
  CHECK(ftl::count_window(std::vector<double>{0.95}, 1.0, 0.05) == 1);
  const auto f = platoon(xs, 0);
  CHECK(ftl::count_window(f, 1.02, 0.05) == 2);
  CHECK(ftl::count_window(Fleet{}, 1.02, 0.05) == 0);
}

TEST_CASE("speed profile interpolation") {
  SpeedProfile p{{0.0, 1.0, 2.0}, {90, 0, 45}};
  CHECK(p.at(-1) == 90);
  CHECK(p.at(0.5) == Approx(45));
  CHECK(p.at(1.5) == Approx(22.5));
  CHECK(p.at(5) == 45);
}

TEST_CASE("free leader advances by v dt") {
  auto f = platoon({1.0}, 90);
  const auto rho = empty_road(20);
  ftl::euler_step(f, {rho, 0.1}, 0.0, kMicro, kFd);
  CHECK(f.trucks[0].x_km == Approx(1.0 + 90 * kMicro.euler_dt_h).epsilon(1e-14));
  CHECK(f.trucks[0].v_kmh == 90.0);
}

TEST_CASE("uniform platoon beyond delta_far is a fixed point") {
  auto f = platoon({0.0, 0.1, 0.2, 0.3, 0.4}, 90);
  const auto rho = empty_road(20);
  for (int k = 0; k < 100; ++k) ftl::euler_step(f, {rho, 0.1}, k * kMicro.euler_dt_h, kMicro, kFd);
  for (std::size_t k = 0; k < f.size(); ++k) CHECK(f.trucks[k].v_kmh == 90.0);
  CHECK(f.trucks[1].x_km - f.trucks[0].x_km == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("velocities stay in [0, v_max]") {
  auto f = platoon({0.0, 0.03, 0.05, 0.06, 0.2}, 90);
  f.scripts[4] = SpeedProfile{{0.0, 10.0 / 3600}, {90, 0}};
  const auto rho = empty_road(20);
  for (int k = 0; k < 3000; ++k) {
    ftl::euler_step(f, {rho, 0.1}, k * kMicro.euler_dt_h, kMicro, kFd);
    for (const auto& t : f.trucks) {
      CHECK(t.v_kmh >= 0.0);
      CHECK(t.v_kmh <= 90.0 + 1e-9);
    }
  }
}

TEST_CASE("scripted trucks follow their profile and report NaN acceleration") {
  auto f = platoon({0.0, 0.5}, 90);
  f.scripts[1] = SpeedProfile{{0.0, 1.0}, {90, 0}};
  const auto rho = empty_road(20);
  std::vector<double> acc(2);
  ftl::accelerations_serial(f, {rho, 0.1}, kMicro, kFd, acc);
  CHECK(std::isnan(acc[1]));
  CHECK(acc[0] == 0.0);
  ftl::euler_step(f, {rho, 0.1}, 0.5, kMicro, kFd);
  CHECK(f.trucks[1].v_kmh == Approx(90 * (1 - (0.5 + kMicro.euler_dt_h))));
}

TEST_CASE("downstream obstacle acts as a leader") {
  auto f = platoon({1.0}, 90);
  f.downstream = Obstacle{1.02, 0.0};
  const auto rho = empty_road(20);
  auto free = platoon({1.0}, 90);
  ftl::euler_step(f, {rho, 0.1}, 0.0, kMicro, kFd);
  ftl::euler_step(free, {rho, 0.1}, 0.0, kMicro, kFd);
  // Gap below delta_close: target speed 0, braking with tau_dec.
  CHECK(free.trucks[0].v_kmh == 90.0);
  CHECK(f.trucks[0].v_kmh == Approx(90.0 * (1 - kMicro.euler_dt_h / kMicro.tau_dec_h)));
}

TEST_CASE("collisions are reported, or thrown in strict mode") {
  auto f = platoon({0.0, 0.001}, 90);
  f.trucks[1].v_kmh = 0;
  f.scripts[1] = SpeedProfile{{0.0}, {0.0}};
  const auto rho = empty_road(20);
  auto g = f;
  const auto ev = ftl::euler_step(f, {rho, 0.1}, 0.0, kMicro, kFd, {Exec::Serial, false});
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].follower == 0);
  CHECK(ev[0].leader == 1);
  CHECK_THROWS_AS(ftl::euler_step(g, {rho, 0.1}, 0.0, kMicro, kFd, {Exec::Serial, true}), CollisionError);
}

TEST_CASE("relaxation toward v_max and first-order convergence") {
  const auto r = check_relaxation(kMicro, kFd);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("stopped leader compresses the platoon to delta_close") {
  const auto r = check_jam_spacing(kMicro, kFd);
  INFO(r.detail);
  CHECK(r.passed);
}

TEST_CASE("car field lookup is per cell") {
  const std::vector<double> rho{1, 2, 3};
  ftl::CarField f{rho, 0.1};
  CHECK(f.at(0.0) == 1);
  CHECK(f.at(0.15) == 2);
  CHECK(f.at(5.0) == 3);
}

TEST_CASE("micro configuration validation") {
  auto m = kMicro;
  m.tau_dec_h = -1;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = kMicro;
  m.delta_far_km = m.delta_close_km;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  CHECK_NOTHROW(kMicro.validate());
}

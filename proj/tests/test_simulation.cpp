#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "twoflow/demos.hpp"
#include "twoflow/output.hpp"
#include "twoflow/simulation.hpp"

using namespace twoflow;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

Scenario small_macro() {
  auto s = demo_scenario("test1a");
  s.horizon_s = 95;
  s.output.interval_s = 10;
  return s;
}

fs::path tmpdir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("twoflow_sim_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("output row count is ceil(horizon / interval) + 1") {
  const auto r = Simulation(small_macro()).run();
  CHECK(r.times_s.size() == 11);
  CHECK(r.times_s.front() == 0.0);
  const auto dir = tmpdir("rows");
  const auto files = write_outputs(r, dir.string());
  CHECK(fs::exists(dir / "road_light_density.csv"));
  CHECK(fs::exists(dir / "road_heavy_flux.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(files.size() == 6);
  CHECK(lines(slurp(dir / "road_light_density.csv")) == 12);
  fs::remove_all(dir);
}

TEST_CASE("zero horizon writes the initial condition only") {
  auto s = small_macro();
  s.horizon_s = 0;
  const auto r = Simulation(s).run();
  REQUIRE(r.times_s.size() == 1);
  CHECK(r.stats.macro_steps == 0);
  const auto& rho = field(r, "road", "light_density");
  CHECK(rho[0][0] == 10);
}

TEST_CASE("manifest records hashes, git string and wall time") {
  const auto r = Simulation(small_macro()).run();
  const auto dir = tmpdir("manifest");
  const auto files = write_outputs(r, dir.string());
  const auto m = slurp(dir / "manifest.json");
  CHECK(m.find("\"config_hash\": \"" + hex64(scenario_hash(r.scenario)) + "\"") != std::string::npos);
  CHECK(m.find("git_describe") != std::string::npos);
  CHECK(m.find("wall_time_s") != std::string::npos);
  for (const auto& f : files) {
    CHECK(fnv1a64(slurp(dir / f.name)) == f.hash);
    CHECK(m.find(hex64(f.hash)) != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("re-running a scenario reproduces every data file") {
  for (const char* name : {"test3a", "test2b"}) {
    CAPTURE(name);
    auto s = demo_scenario(name);
    s.horizon_s = 300;
    const auto a = write_outputs(Simulation(s).run(), tmpdir("a").string());
    const auto b = write_outputs(Simulation(s).run(), tmpdir("b").string());
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].name == b[k].name);
      CHECK(a[k].hash == b[k].hash);
    }
  }
  fs::remove_all(tmpdir("a"));
  fs::remove_all(tmpdir("b"));
}

TEST_CASE("a too large time step is refused at construction") {
  auto s = small_macro();
  s.dt_s = 3.0;
  CHECK_THROWS_AS(Simulation{s}, CflError);
}

TEST_CASE("invalid scenarios are rejected") {
  auto s = small_macro();
  s.roads.clear();
  CHECK_THROWS_AS(Simulation{s}, ScenarioError);
}

TEST_CASE("trucks are conserved: on the road = inserted + initial - exited") {
  auto s = demo_scenario("test3b");
  s.horizon_s = 400;
  Simulation sim(s);
  std::size_t initial = 0;
  for (std::size_t r = 0; r < sim.n_roads(); ++r) initial += sim.fleet(r).size();
  sim.run([&](const Simulation& x) {
    std::size_t on = 0;
    for (std::size_t r = 0; r < x.n_roads(); ++r) {
      on += x.fleet(r).size();
      CHECK(x.fleet(r).ordered());
    }
    CHECK(on == initial + x.stats().inserted - x.stats().exited);
  });
}

TEST_CASE("every truck sits in exactly one road and one registry cell") {
  auto s = demo_scenario("test3b");
  s.horizon_s = 300;
  Simulation sim(s);
  sim.run([&](const Simulation& x) {
    std::map<TruckId, int> seen;
    for (std::size_t r = 0; r < x.n_roads(); ++r) {
      const auto& g = x.grid(r);
      std::size_t listed = 0;
      for (const auto& cell : g.truck_registry) listed += cell.size();
      std::size_t on_road = 0;
      for (const auto& t : x.fleet(r).trucks) {
        ++seen[t.id];
        on_road += t.x_km >= 0 && t.x_km < g.length_km;
      }
      CHECK(listed == on_road);
    }
    for (const auto& [id, n] : seen) CHECK(n == 1);
  });
}

TEST_CASE("multiscale states stay admissible") {
  auto s = demo_scenario("test2b");
  s.horizon_s = 600;
  Simulation sim(s);
  sim.run([&](const Simulation& x) {
    const auto& g = x.grid(0);
    for (const auto& c : g.cells) CHECK(fd::in_domain(c, x.road_config(0)));
  });
}

TEST_CASE("boundary schedules switch at their start time") {
  auto s = demo_scenario("test2b");
  s.horizon_s = 1000;
  Simulation sim(s);
  bool before = false, after = false;
  sim.run([&](const Simulation& x) {
    const auto& bc = x.grid(0).right_bc;
    if (x.t_s() < 899) before = before || bc.state.rho_L == 250;
    if (x.t_s() > 901) after = after || bc.state.rho_L == 10;
  });
  CHECK(before);
  CHECK(after);
}

TEST_CASE("trajectory CSV layout") {
  auto s = demo_scenario("stopgo");
  s.horizon_s = 20;
  const auto r = Simulation(s).run();
  const auto text = trajectory_csv(r.trajectories);
  CHECK(text.rfind("t_s,truck_id,road_id,x_km,v_kmh\n", 0) == 0);
  CHECK(lines(text) == r.trajectories.size() + 1);
}

TEST_CASE("shortest round-trip number format") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(65.0) == "65");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("unusable output directory is reported with its path") {
  const auto r = Simulation(small_macro()).run();
  const auto file = tmpdir("blocker");
  { std::ofstream(file.string()) << "x"; }
  try {
    write_outputs(r, (file / "sub").string());
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("twoflow_sim_blocker") != std::string::npos);
  }
  fs::remove_all(file);
}

TEST_CASE("car density cap follows the trucks") {
  auto g = RoadGrid::uniform(1.0, 0.1);
  g.cells[3].rho_H = 20;
  const auto cap = max_car_density(g, FdConfig::motorway());
  CHECK(cap[3] == Approx(fd::rho_star_L(20, FdConfig::motorway())));
  CHECK(cap[0] == Approx(FdConfig::motorway().rho_L_max));
}

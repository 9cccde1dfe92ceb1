#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include "twoflow/demos.hpp"
#include "twoflow/scenario.hpp"
#include "twoflow/sensors.hpp"

using namespace twoflow;
namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "twoflow_cli_test";

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + TWOFLOW_CLI_PATH + "\" " + args + " > \"" +
                          (kDir / "stdout.txt").string() + "\" 2> \"" + (kDir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct TempDir {
  TempDir() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
  ~TempDir() { fs::remove_all(kDir); }
};

std::string short_scenario() {
  auto s = demo_scenario("test1a");
  s.horizon_s = 60;
  return print_scenario(s);
}

}  // namespace

TEST_CASE("run writes outputs and a manifest") {
  TempDir t;
  write(kDir / "s.json", short_scenario());
  CHECK(cli("run --scenario " + (kDir / "s.json").string() + " --out " + (kDir / "out").string()) == 0);
  CHECK(fs::exists(kDir / "out" / "manifest.json"));
  CHECK(fs::exists(kDir / "out" / "road_light_density.csv"));
}

TEST_CASE("missing scenario file is an input error") {
  TempDir t;
  CHECK(cli("run --scenario " + (kDir / "nope.json").string()) == 2);
  CHECK(slurp(kDir / "stderr.txt").find("nope.json") != std::string::npos);
}

TEST_CASE("invalid scenario lists its errors") {
  TempDir t;
  write(kDir / "bad.json", R"({"horizon_s": 60, "roads": []})");
  CHECK(cli("run --scenario " + (kDir / "bad.json").string() + " --out " + (kDir / "o").string()) == 2);
  CHECK(slurp(kDir / "stderr.txt").find("road") != std::string::npos);
}

TEST_CASE("unstable time step is rejected with the bound") {
  TempDir t;
  write(kDir / "s.json", short_scenario());
  CHECK(cli("run --scenario " + (kDir / "s.json").string() + " --dt-s 3 --out " + (kDir / "o").string()) == 2);
  CHECK(slurp(kDir / "stderr.txt").find("2.76") != std::string::npos);
}

TEST_CASE("unknown demo name") {
  TempDir t;
  CHECK(cli("demo no_such_demo") != 0);
}

TEST_CASE("validate passes on the default parameters") {
  TempDir t;
  CHECK(cli("validate") == 0);
  CHECK(slurp(kDir / "stdout.txt").find("all checks passed") != std::string::npos);
}

TEST_CASE("calibrate fits synthetic sensor data") {
  TempDir t;
  write(kDir / "data.csv", format_sensors(synthetic_records(FdConfig::motorway(), VehicleClass::Light, 3000, 0.02, 4)));
  CHECK(cli("calibrate --data " + (kDir / "data.csv").string() + " --class light --lanes 2 --out " +
            (kDir / "fd.json").string()) == 0);
  const auto fd = read_fd_file((kDir / "fd.json").string());
  CHECK(fd.light.v_max_kmh == doctest::Approx(130).epsilon(0.02));
}

TEST_CASE("calibrate refuses malformed rows") {
  TempDir t;
  write(kDir / "data.csv", std::string(kSensorHeader) + "\n2019-01-01T00:00:00,S1,x,light,60,60\n");
  CHECK(cli("calibrate --data " + (kDir / "data.csv").string() + " --class light --lanes 2 --out " +
            (kDir / "fd.json").string()) == 2);
  CHECK(slurp(kDir / "stderr.txt").find("line 2") != std::string::npos);
}

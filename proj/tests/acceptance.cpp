// One pass/fail line per acceptance criterion. Exit status is the failure count.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "twoflow/demos.hpp"
#include "twoflow/output.hpp"
#include "twoflow/simulation.hpp"
#include "twoflow/validation.hpp"

using namespace twoflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

Outcome from_check(const CheckResult& c) { return {c.passed, c.detail}; }

Outcome both(const CheckResult& a, const CheckResult& b) {
  return {a.passed && b.passed, a.name + ": " + a.detail + "; " + b.name + ": " + b.detail};
}

Outcome from_demo(const std::vector<std::string>& names) {
  Outcome o{true, ""};
  for (const auto& name : names) {
    const auto result = Simulation(demo_scenario(name)).run();
    const auto summary = summarize_demo(name, result);
    for (const auto& c : summary.checks) {
      o.passed = o.passed && c.passed;
      if (!o.detail.empty()) o.detail += "; ";
      o.detail += name + " " + c.name + (c.passed ? " ok" : " FAILED") + " (" + c.detail + ")";
    }
  }
  return o;
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "twoflow_acceptance";
  std::size_t files = 0;
  std::string bad;
  for (const auto& name : demo_names()) {
    const auto s = demo_scenario(name);
    const auto a = write_outputs(Simulation(s).run(), (root / name / "a").string());
    const auto b = write_outputs(Simulation(s).run(), (root / name / "b").string());
    if (a.size() != b.size()) bad += " " + name;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
      ++files;
      if (a[k].name != b[k].name || a[k].hash != b[k].hash) bad += " " + name + "/" + a[k].name;
    }
  }
  fs::remove_all(root);
  return {bad.empty(), std::to_string(files) + " files compared" + (bad.empty() ? "" : ", differing:" + bad)};
}

}  // namespace

int main() {
  const FdConfig fd = FdConfig::motorway();
  const MicroConfig micro = MicroConfig::motorway();
  const double dx = 0.1;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"FD endpoints", [&] { return from_check(check_fd_endpoints(fd)); }},
      {"FD property suites", [&] { return from_check(check_fd_properties(fd, 100)); }},
      {"mass conservation", [&] { return from_check(check_conservation(fd, dx)); }},
      {"Riemann oracle", [&] { return both(check_riemann_shock(fd, dx), check_riemann_rarefaction(fd, dx)); }},
      {"Test 1A creeping", [] { return from_demo({"test1a"}); }},
      {"Test 2A slow progress", [] { return from_demo({"test2a"}); }},
      {"Test 3A stop & go", [] { return from_demo({"test3a"}); }},
      {"FtL relaxation", [&] { return from_check(check_relaxation(micro, fd)); }},
      {"jam spacing", [&] { return from_check(check_jam_spacing(micro, fd)); }},
      {"Test 1B/2B multiscale", [] { return from_demo({"test1b", "test2b"}); }},
      {"Test 3B merge", [] { return from_demo({"test3b"}); }},
      {"calibration round-trip", [&] { return from_check(check_calibration(fd)); }},
      {"determinism", determinism},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.passed;
    std::printf("[%s] %2zu %s (%.2f s): %s\n", o.passed ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures;
}

#pragma once

// Built-in scenarios and the checks reported after running them.

#include <string>
#include <string_view>
#include <vector>

#include "twoflow/scenario.hpp"
#include "twoflow/simulation.hpp"

namespace twoflow {

std::vector<std::string> demo_names();

/// Throws std::invalid_argument for an unknown name.
Scenario demo_scenario(std::string_view name);

struct DemoCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DemoSummary {
  std::string name;
  std::vector<DemoCheck> checks;
  std::vector<std::string> notes;

  bool all_passed() const;
  std::string text() const;
};

DemoSummary summarize_demo(std::string_view name, const RunResult& result);

/// Measured backward queue of a stop & go run, from the trajectories.
struct QueueExtent {
  bool stopped = false;     // some truck fell below 1 km/h
  double upstream_km = 0.0;  // distance from the slowdown point to the rearmost stop
  double duration_min = 0.0;
  double first_stop_s = 0.0;
  double last_stop_s = 0.0;
};

QueueExtent stopgo_queue(const RunResult& result, double slowdown_x_km);

/// Stop & go runs over a small grid of tau_acc and Delta_close; one line each.
std::string stopgo_sweep();

// Lookup helpers shared by summaries and tests.
const RoadRecord& road_record(const RunResult& r, std::string_view id);
const FieldMatrix& field(const RunResult& r, std::string_view road, std::string_view key);

}  // namespace twoflow

#pragma once

// Declarative scenario description and its JSON form. Times are in seconds and
// lengths in km here; conversion to hours happens when a simulation is built.

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twoflow/ctm.hpp"
#include "twoflow/fd.hpp"
#include "twoflow/ftl.hpp"

namespace twoflow {

enum class ModelKind { Macro, Multiscale };

/// value + amplitude * sin(2 pi (x - from) / wavelength) on [from, to).
struct Piece {
  double from_km = 0.0;
  double to_km = 0.0;
  double value = 0.0;
  double amplitude = 0.0;
  double wavelength_km = 1.0;

  double at(double x_km) const;
  bool operator==(const Piece&) const = default;
};

/// Boundary condition active from `from_s` until the next entry.
struct BcSpec {
  double from_s = 0.0;
  BoundaryCondition::Kind kind = BoundaryCondition::Kind::FreeOutflow;
  double rho_L = 0.0;
  double rho_H = 0.0;
  double flux_L = 0.0;
  double flux_H = 0.0;

  BoundaryCondition to_bc() const;
  bool operator==(const BcSpec&) const = default;
};

struct ScriptKnot {
  double t_s = 0.0;
  double v_kmh = 0.0;
  bool operator==(const ScriptKnot&) const = default;
};

struct TruckSpec {
  double x_km = 0.0;
  double v_kmh = 0.0;
  std::size_t path = 0;
  std::vector<ScriptKnot> script;  // empty: follows the FtL dynamics
  bool operator==(const TruckSpec&) const = default;
};

/// Evenly spaced trucks on [from, to), all at the same speed.
struct TruckFill {
  double from_km = 0.0;
  double to_km = 0.0;
  double spacing_km = 0.05;
  double v_kmh = 0.0;
  bool operator==(const TruckFill&) const = default;
};

/// One truck every headway_s entering at x = 0 while start_s <= t < until_s.
struct TruckInflow {
  double headway_s = 4.0;
  double v_kmh = 90.0;
  double start_s = 0.0;
  double until_s = std::numeric_limits<double>::infinity();
  std::size_t path = 0;
  bool operator==(const TruckInflow&) const = default;
};

struct RoadSpec {
  std::string id;
  double length_km = 10.0;
  int lanes = 2;
  int truck_lanes = 1;
  std::vector<Piece> light;
  std::vector<Piece> heavy;  // macro model only
  std::vector<TruckSpec> trucks;
  std::optional<TruckFill> truck_fill;
  std::vector<BcSpec> left_bc{BcSpec{}};
  std::vector<BcSpec> right_bc{BcSpec{}};
  std::optional<TruckInflow> truck_inflow;
  bool operator==(const RoadSpec&) const = default;
};

struct JunctionSpec {
  std::string kind = "merge";
  std::vector<std::string> incoming;
  std::vector<std::string> outgoing;
  double priority = 0.5;
  std::array<double, 2> theta_L{1, 0};
  std::array<double, 2> theta_H{1, 0};
  bool operator==(const JunctionSpec&) const = default;
};

/// Microscopic parameters in scenario units (seconds).
struct MicroSpec {
  double delta_close_km = 25e-3;
  double delta_far_km = 50e-3;
  double v_max_kmh = 90.0;
  double tau_acc_s = 1.4e-2 * 3600.0;
  double tau_dec_s = 2e-4 * 3600.0;
  double euler_dt_s = 0.1;
  double coupling_window_km = 50e-3;
  double coupling_slope_km = 0.0;

  MicroConfig to_config() const;
  bool operator==(const MicroSpec&) const = default;
};

struct OutputSpec {
  double interval_s = 10.0;
  std::vector<std::string> quantities{"density", "velocity", "flux"};
  int trajectory_thinning = 1;  // keep every n-th output row of trajectories
  bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
  std::string name = "scenario";
  ModelKind model = ModelKind::Macro;
  FdConfig fd = FdConfig::motorway();
  std::string fd_file;  // if set, fd was read from this file
  MicroSpec micro;
  double dx_km = 0.1;
  double dt_s = 2.6;
  double horizon_s = 600.0;
  OutputSpec output;
  std::vector<RoadSpec> roads;
  std::vector<JunctionSpec> junctions;
  std::vector<std::vector<std::string>> paths;

  bool operator==(const Scenario&) const = default;
};

/// All problems found while reading or checking a scenario.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses and validates. `base_dir` resolves a relative fd_file.
Scenario parse_scenario(std::string_view json_text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);
std::string print_scenario(const Scenario& s);

/// Semantic checks (references, ranges, initial states in D); empty if valid.
std::vector<std::string> check_scenario(const Scenario& s);

/// The scenario FD adapted to a road's lane counts.
FdConfig road_fd(const FdConfig& base, const RoadSpec& road);

/// Flat key-value FdConfig file.
std::string fd_to_json(const FdConfig& cfg);
FdConfig fd_from_json(std::string_view json_text);
FdConfig read_fd_file(const std::string& path);
void write_fd_file(const std::string& path, const FdConfig& cfg);

/// FNV-1a 64-bit of the canonical printed form.
std::uint64_t scenario_hash(const Scenario& s);

}  // namespace twoflow

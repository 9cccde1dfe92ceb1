#pragma once

// Time loop for a scenario: macroscopic or multi-scale, single road or network.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "twoflow/ctm.hpp"
#include "twoflow/exec.hpp"
#include "twoflow/multiscale.hpp"
#include "twoflow/network.hpp"
#include "twoflow/scenario.hpp"

namespace twoflow {

/// One output time series: rows[k][i] is cell i at times_s[k].
using FieldMatrix = std::vector<std::vector<double>>;

struct TrajectoryRow {
  double t_s = 0.0;
  TruckId truck = 0;
  std::size_t road = 0;
  double x_km = 0.0;
  double v_kmh = 0.0;
};

struct RoadRecord {
  std::string id;
  std::vector<double> centers_km;
  std::map<std::string, FieldMatrix> fields;  // "<class>_<quantity>"
};

struct RunStats {
  std::size_t macro_steps = 0;
  std::size_t collisions = 0;
  std::size_t gate_holds = 0;
  std::size_t transfers = 0;
  std::size_t transfer_holds = 0;
  std::size_t exited = 0;
  std::size_t inserted = 0;
};

struct RunResult {
  Scenario scenario;
  std::vector<double> times_s;
  std::vector<RoadRecord> roads;
  std::vector<TrajectoryRow> trajectories;
  std::vector<TruckTransfer> transfers;  // in order of occurrence
  RunStats stats;
  double wall_time_s = 0.0;
};

class Simulation {
 public:
  explicit Simulation(const Scenario& s, Exec exec = Exec::Parallel);

  /// Advances one macro step (CFL step for cars and, in the macro model, trucks).
  void step();
  double t_s() const { return t_h_ * 3600.0; }
  double dt_s() const { return scenario_.dt_s; }
  std::size_t steps_to_horizon() const;

  /// Runs to the horizon, recording at the output interval. The hook, if set,
  /// is called after every step.
  RunResult run(const std::function<void(const Simulation&)>& on_step = {});

  const Scenario& scenario() const { return scenario_; }
  const Network& network() const { return net_; }
  ModelKind model() const { return scenario_.model; }
  const FdConfig& road_config(std::size_t r) const { return fds_[r]; }
  /// Cell states of road r; for the multi-scale model rho_H is the effective density.
  const RoadGrid& grid(std::size_t r) const;
  const Fleet& fleet(std::size_t r) const { return ms_.at(r).fleet; }
  std::size_t n_roads() const { return net_.roads.size(); }
  const RunStats& stats() const { return stats_; }
  const std::vector<TruckTransfer>& transfers() const { return transfers_; }
  const std::vector<JunctionFlux>& last_junction_fluxes() const { return junction_fluxes_; }
  /// Trucks waiting to enter each road from its inflow.
  std::size_t pending_inflow(std::size_t r) const { return inflow_[r].pending; }

 private:
  struct InflowState {
    bool active = false;
    TruckInflow spec;
    double next_s = 0.0;
    std::size_t pending = 0;
  };

  void apply_schedules();
  void macro_step();
  void multiscale_step();
  void release_inflow(double t_s);
  void record(RunResult& out) const;

  Scenario scenario_;
  Exec exec_;
  Network net_;
  std::vector<FdConfig> fds_;
  std::vector<CtmSolver> macro_;
  std::vector<MultiscaleState> ms_;
  std::vector<MultiscaleSolver> micro_;
  std::vector<InflowState> inflow_;
  std::vector<JunctionFlux> junction_fluxes_;
  std::vector<TruckTransfer> transfers_;
  RunStats stats_;
  double t_h_ = 0.0;
  TruckId next_id_ = 0;
};

/// Effective truck density and the car density limit it implies, per cell.
std::vector<double> max_car_density(const RoadGrid& grid, const FdConfig& fd);

}  // namespace twoflow

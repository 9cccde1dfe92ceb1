#pragma once

// Macroscopic cars coupled to microscopic trucks on one road.
//
// Per macro step: the truck field is frozen into effective densities, cars take
// one CTM step, then trucks take `substeps` Euler steps against the frozen
// post-step car field. Trucks are kept out of windows whose car density would
// become inadmissible with them inside.

#include <cstddef>
#include <vector>

#include "twoflow/ctm.hpp"
#include "twoflow/exec.hpp"
#include "twoflow/fd.hpp"
#include "twoflow/ftl.hpp"

namespace twoflow {

struct CouplingSchedule {
  double macro_dt_h = 2.0 / 3600.0;
  double micro_dt_h = 0.1 / 3600.0;

  /// Number of micro steps per macro step; throws ConfigError unless integral.
  int substeps() const;
};

struct MultiscaleState {
  RoadGrid grid;  // cells[i].rho_H mirrors effective_rho_H during the car step
  Fleet fleet;
  std::vector<double> effective_rho_H;
  double t_h = 0.0;
};

struct GateHold {
  double t_h = 0.0;
  TruckId truck = 0;
  std::size_t cell = 0;
};

struct MultiscaleStepReport {
  MacroStepReport macro;
  std::vector<CollisionEvent> collisions;
  std::vector<GateHold> holds;
};

namespace multiscale {

/// N^delta(x_i) / (2 delta) at every cell center, clamped to [0, rho_H_max].
std::vector<double> effective_density(const Fleet& fleet, const RoadGrid& grid, double delta_km,
                                      const FdConfig& fd);

/// Window count after the truck arrives -> admissible for the car density there?
bool entry_gate(double rho_L_target, std::size_t trucks_in_window_with_truck, double delta_km,
                const FdConfig& fd);

/// Cells whose coupling window [c - delta, c + delta) contains x.
std::pair<std::size_t, std::size_t> windows_containing(const RoadGrid& grid, double x_km,
                                                       double delta_km);

/// Rebuilds the per-cell truck registry from the fleet.
void refresh_registry(RoadGrid& grid, const Fleet& fleet);

}  // namespace multiscale

class MultiscaleSolver {
 public:
  MultiscaleSolver(FdConfig fd, MicroConfig micro, CouplingSchedule schedule, double dx_km,
                   Exec exec = Exec::Parallel);

  /// Full macro step: refresh, car step, all truck substeps, refresh.
  MultiscaleStepReport step(MultiscaleState& s);

  // Phases, for callers that interleave several roads between barriers.
  void refresh(MultiscaleState& s) const;
  MacroStepReport car_step(MultiscaleState& s);
  /// One Euler step of the fleet with the entry gate; the car field is read-only.
  void truck_substep(MultiscaleState& s, double t_h, MultiscaleStepReport& rep) const;

  /// Attempts to put a truck on the road at x = 0 (entry gate plus a Delta_close
  /// headway behind the rearmost truck). Returns false if it must wait.
  bool try_insert(MultiscaleState& s, const Truck& truck) const;

  const FdConfig& fd() const { return fd_; }
  const MicroConfig& micro() const { return micro_; }
  const CouplingSchedule& schedule() const { return schedule_; }
  int substeps() const { return substeps_; }

 private:
  FdConfig fd_;
  MicroConfig micro_;
  CouplingSchedule schedule_;
  int substeps_;
  Exec exec_;
  CtmSolver cars_;
};

/// Convenience wrapper around MultiscaleSolver::step.
MultiscaleStepReport multiscale_step(MultiscaleState& s, const CouplingSchedule& schedule,
                                     const FdConfig& fd, const MicroConfig& micro);

}  // namespace twoflow

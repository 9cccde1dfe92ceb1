#pragma once

// Multi-class cell transmission model on a single road.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "twoflow/exec.hpp"
#include "twoflow/fd.hpp"

namespace twoflow {

using TruckId = std::uint32_t;

struct ClassFlux {
  double L = 0.0;  // veh/h
  double H = 0.0;  // veh/h

  bool operator==(const ClassFlux&) const = default;
};

struct SendReceive {
  double send = 0.0;
  double receive = 0.0;
};

struct BoundaryCondition {
  enum class Kind {
    Dirichlet,    // ghost cell held at `state`
    Inflow,       // demand `flux`, clamped by the first cell's supply (upstream end only)
    FreeOutflow,  // ghost cell copies the adjacent cell
    Closed,       // zero flux
    Prescribed,   // exact interface flux, set by junction coupling
  };

  Kind kind = Kind::FreeOutflow;
  TwoClassState state{};
  ClassFlux flux{};

  static BoundaryCondition dirichlet(TwoClassState s) { return {Kind::Dirichlet, s, {}}; }
  static BoundaryCondition inflow(double f_L, double f_H) { return {Kind::Inflow, {}, {f_L, f_H}}; }
  static BoundaryCondition free_outflow() { return {Kind::FreeOutflow, {}, {}}; }
  static BoundaryCondition closed() { return {Kind::Closed, {}, {}}; }
  static BoundaryCondition prescribed(ClassFlux f) { return {Kind::Prescribed, {}, f}; }

  bool operator==(const BoundaryCondition&) const = default;
};

const char* to_string(BoundaryCondition::Kind kind);

struct RoadGrid {
  double length_km = 0.0;
  double dx_km = 0.1;
  std::vector<TwoClassState> cells;
  BoundaryCondition left_bc = BoundaryCondition::free_outflow();
  BoundaryCondition right_bc = BoundaryCondition::free_outflow();
  std::vector<std::vector<TruckId>> truck_registry;  // per cell, ascending position

  /// n_cells = round(length/dx); throws std::invalid_argument on a degenerate grid.
  static RoadGrid uniform(double length_km, double dx_km, TwoClassState init = {});

  std::size_t n_cells() const { return cells.size(); }
  double cell_center_km(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx_km; }
  /// Index of the cell holding x, clamped to the road.
  std::size_t cell_of(double x_km) const;

  double mass_L() const;
  double mass_H() const;
};

inline constexpr std::size_t kMaxCells = 10'000'000;

struct MacroStepReport {
  double t_h = 0.0;
  double total_mass_L = 0.0;
  double total_mass_H = 0.0;
  double max_flux_L = 0.0;
  double max_flux_H = 0.0;
};

class CflError : public std::runtime_error {
 public:
  CflError(const std::string& what, double max_dt_h)
      : std::runtime_error(what), max_dt_h_(max_dt_h) {}
  double max_dt_h() const noexcept { return max_dt_h_; }

 private:
  double max_dt_h_;
};

namespace ctm {

SendReceive sending_receiving_L(const TwoClassState& s, const FdConfig& cfg);
SendReceive sending_receiving_H(const TwoClassState& s, const FdConfig& cfg);

/// Godunov/CTM flux min(S(left), R(right)) per class.
ClassFlux interface_flux(const TwoClassState& left, const TwoClassState& right, const FdConfig& cfg);

/// Largest admissible time step for spacing dx: dx over the characteristic-speed bound.
double max_stable_dt_h(double dx_km, const FdConfig& cfg);

bool cfl_check(const RoadGrid& grid, double dt_h, const FdConfig& cfg);

/// Fluxes through both road ends given the boundary conditions and the end cells.
ClassFlux left_boundary_flux(const RoadGrid& grid, const FdConfig& cfg);
ClassFlux right_boundary_flux(const RoadGrid& grid, const FdConfig& cfg);

}  // namespace ctm

struct MacroOptions {
  bool evolve_L = true;
  bool evolve_H = true;
  Exec exec = Exec::Parallel;
};

/// Fixed-step CTM solver; the CFL condition is validated once at construction.
class CtmSolver {
 public:
  CtmSolver(FdConfig cfg, double dt_h, double dx_km, MacroOptions opts = {});

  /// Advances one step. Throws std::invalid_argument if the grid spacing does
  /// not match and std::logic_error if a post-state leaves the domain.
  MacroStepReport step(RoadGrid& grid);

  double dt_h() const { return dt_h_; }
  double t_h() const { return t_h_; }
  const FdConfig& config() const { return cfg_; }
  const MacroOptions& options() const { return opts_; }
  /// Interface fluxes of the most recent step (n_cells + 1 entries).
  const std::vector<ClassFlux>& last_fluxes() const { return fluxes_; }

 private:
  FdConfig cfg_;
  double dt_h_;
  double dx_km_;
  MacroOptions opts_;
  double t_h_ = 0.0;
  std::vector<ClassFlux> fluxes_;
};

/// One-shot convenience wrapper; validates CFL on every call.
MacroStepReport macro_step(RoadGrid& grid, double dt_h, const FdConfig& cfg, MacroOptions opts = {});

}  // namespace twoflow

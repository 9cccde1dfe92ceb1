#include "twoflow/ctm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twoflow/kernels.hpp"

namespace twoflow {

const char* to_string(BoundaryCondition::Kind kind) {
  switch (kind) {
    case BoundaryCondition::Kind::Dirichlet: return "dirichlet";
    case BoundaryCondition::Kind::Inflow: return "inflow";
    case BoundaryCondition::Kind::FreeOutflow: return "free";
    case BoundaryCondition::Kind::Closed: return "closed";
    case BoundaryCondition::Kind::Prescribed: return "prescribed";
  }
  return "?";
}

RoadGrid RoadGrid::uniform(double length_km, double dx_km, TwoClassState init) {
  if (!(length_km > 0) || !(dx_km > 0))
    throw std::invalid_argument("road length and dx must be positive");
  const double n = std::round(length_km / dx_km);
  if (n < 1) throw std::invalid_argument("road shorter than one cell");
  if (n > static_cast<double>(kMaxCells)) {
    std::ostringstream os;
    os << "grid of " << n << " cells exceeds the limit of " << kMaxCells
       << " (dx_km=" << dx_km << " is too small for a " << length_km << " km road)";
    throw std::invalid_argument(os.str());
  }
  RoadGrid g;
  g.length_km = length_km;
  g.dx_km = dx_km;
  g.cells.assign(static_cast<std::size_t>(n), init);
  g.truck_registry.resize(g.cells.size());
  return g;
}

std::size_t RoadGrid::cell_of(double x_km) const {
  if (!(x_km > 0)) return 0;
  const auto i = static_cast<std::size_t>(x_km / dx_km);
  return std::min(i, cells.size() - 1);
}

double RoadGrid::mass_L() const {
  double m = 0.0;
  for (const auto& c : cells) m += c.rho_L;
  return m * dx_km;
}

double RoadGrid::mass_H() const {
  double m = 0.0;
  for (const auto& c : cells) m += c.rho_H;
  return m * dx_km;
}

namespace ctm {

SendReceive sending_receiving_L(const TwoClassState& s, const FdConfig& cfg) {
  const double sig = fd::sigma_L(std::clamp(s.rho_H, 0.0, cfg.rho_H_max), cfg);
  return {fd::f_L({std::min(s.rho_L, sig), s.rho_H}, cfg),
          fd::f_L({std::max(s.rho_L, sig), s.rho_H}, cfg)};
}

SendReceive sending_receiving_H(const TwoClassState& s, const FdConfig& cfg) {
  const double sig = fd::sigma_H(std::clamp(s.rho_L, 0.0, cfg.rho_L_max), cfg);
  return {fd::f_H({s.rho_L, std::min(s.rho_H, sig)}, cfg),
          fd::f_H({s.rho_L, std::max(s.rho_H, sig)}, cfg)};
}

ClassFlux interface_flux(const TwoClassState& left, const TwoClassState& right,
                         const FdConfig& cfg) {
  const auto l_L = sending_receiving_L(left, cfg);
  const auto r_L = sending_receiving_L(right, cfg);
  const auto l_H = sending_receiving_H(left, cfg);
  const auto r_H = sending_receiving_H(right, cfg);
  return {std::max(0.0, std::min(l_L.send, r_L.receive)),
          std::max(0.0, std::min(l_H.send, r_H.receive))};
}

double max_stable_dt_h(double dx_km, const FdConfig& cfg) {
  const double speed = std::max({cfg.light.v_max_kmh, cfg.heavy.v_max_kmh, fd::max_wave_speed(cfg)});
  return dx_km / speed;
}

bool cfl_check(const RoadGrid& grid, double dt_h, const FdConfig& cfg) {
  if (dt_h == 0.0) return true;
  if (!(dt_h > 0)) return false;
  return dt_h <= max_stable_dt_h(grid.dx_km, cfg) * (1.0 + 1e-12);
}

ClassFlux left_boundary_flux(const RoadGrid& grid, const FdConfig& cfg) {
  const auto& bc = grid.left_bc;
  const auto& first = grid.cells.front();
  switch (bc.kind) {
    case BoundaryCondition::Kind::Dirichlet: return interface_flux(bc.state, first, cfg);
    case BoundaryCondition::Kind::Inflow:
      return {std::min(bc.flux.L, sending_receiving_L(first, cfg).receive),
              std::min(bc.flux.H, sending_receiving_H(first, cfg).receive)};
    case BoundaryCondition::Kind::FreeOutflow: return interface_flux(first, first, cfg);
    case BoundaryCondition::Kind::Closed: return {};
    case BoundaryCondition::Kind::Prescribed: return bc.flux;
  }
  return {};
}

ClassFlux right_boundary_flux(const RoadGrid& grid, const FdConfig& cfg) {
  const auto& bc = grid.right_bc;
  const auto& last = grid.cells.back();
  switch (bc.kind) {
    case BoundaryCondition::Kind::Dirichlet: return interface_flux(last, bc.state, cfg);
    case BoundaryCondition::Kind::Inflow:
      throw std::invalid_argument("inflow boundary is only valid at the upstream end");
    case BoundaryCondition::Kind::FreeOutflow: return interface_flux(last, last, cfg);
    case BoundaryCondition::Kind::Closed: return {};
    case BoundaryCondition::Kind::Prescribed: return bc.flux;
  }
  return {};
}

}  // namespace ctm

CtmSolver::CtmSolver(FdConfig cfg, double dt_h, double dx_km, MacroOptions opts)
    : cfg_(std::move(cfg)), dt_h_(dt_h), dx_km_(dx_km), opts_(opts) {
  cfg_.validate();
  if (!(dx_km > 0)) throw std::invalid_argument("dx must be positive");
  if (!(dt_h >= 0)) throw std::invalid_argument("dt must be non-negative");
  const double limit = ctm::max_stable_dt_h(dx_km, cfg_);
  if (dt_h > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "CFL violated: dt=" << dt_h * 3600.0 << " s exceeds dx/max speed = " << limit * 3600.0
       << " s";
    throw CflError(os.str(), limit);
  }
}

MacroStepReport CtmSolver::step(RoadGrid& grid) {
  if (std::abs(grid.dx_km - dx_km_) > 1e-12 * dx_km_)
    throw std::invalid_argument("grid spacing differs from the solver's");
  const std::size_t n = grid.n_cells();
  fluxes_.assign(n + 1, ClassFlux{});
  fluxes_[0] = ctm::left_boundary_flux(grid, cfg_);
  fluxes_[n] = ctm::right_boundary_flux(grid, cfg_);
  kernels::interior_fluxes(opts_.exec, grid.cells, cfg_, fluxes_);
  kernels::conservative_update(opts_.exec, grid.cells, fluxes_, dt_h_ / dx_km_, opts_.evolve_L,
                               opts_.evolve_H);
  t_h_ += dt_h_;

  MacroStepReport rep;
  rep.t_h = t_h_;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fd::in_domain(grid.cells[i], cfg_)) {
      std::ostringstream os;
      os << "cell " << i << " left the admissible domain: (" << grid.cells[i].rho_L << ", "
         << grid.cells[i].rho_H << ") at t=" << t_h_ * 3600.0 << " s";
      throw std::logic_error(os.str());
    }
  }
  rep.total_mass_L = grid.mass_L();
  rep.total_mass_H = grid.mass_H();
  for (const auto& f : fluxes_) {
    rep.max_flux_L = std::max(rep.max_flux_L, f.L);
    rep.max_flux_H = std::max(rep.max_flux_H, f.H);
  }
  return rep;
}

MacroStepReport macro_step(RoadGrid& grid, double dt_h, const FdConfig& cfg, MacroOptions opts) {
  CtmSolver solver(cfg, dt_h, grid.dx_km, opts);
  return solver.step(grid);
}

}  // namespace twoflow

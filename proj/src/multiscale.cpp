#include "twoflow/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace twoflow {

int CouplingSchedule::substeps() const {
  if (!(macro_dt_h > 0) || !(micro_dt_h > 0))
    throw ConfigError({"macro and micro time steps must be positive"});
  const double r = macro_dt_h / micro_dt_h;
  const double n = std::round(r);
  if (n < 1 || std::abs(r - n) > 1e-9 * n)
    throw ConfigError({"macro_dt / micro_dt must be a positive integer"});
  return static_cast<int>(n);
}

namespace multiscale {

namespace {

std::vector<double> sorted_positions(const Fleet& fleet) {
  std::vector<double> x;
  x.reserve(fleet.trucks.size());
  for (const auto& t : fleet.trucks) x.push_back(t.x_km);
  if (!std::is_sorted(x.begin(), x.end())) std::sort(x.begin(), x.end());
  return x;
}

std::vector<std::size_t> window_counts(const Fleet& fleet, const RoadGrid& grid, double delta) {
  const auto x = sorted_positions(fleet);
  std::vector<std::size_t> n(grid.n_cells());
  for (std::size_t i = 0; i < n.size(); ++i)
    n[i] = ftl::count_window(x, grid.cell_center_km(i), delta);
  return n;
}

double effective_from_count(std::size_t count, double delta, const FdConfig& fd) {
  return std::min(static_cast<double>(count) / (2.0 * delta), fd.rho_H_max);
}

}  // namespace

std::vector<double> effective_density(const Fleet& fleet, const RoadGrid& grid, double delta_km,
                                      const FdConfig& fd) {
  const auto counts = window_counts(fleet, grid, delta_km);
  std::vector<double> eff(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    eff[i] = effective_from_count(counts[i], delta_km, fd);
  return eff;
}

bool entry_gate(double rho_L_target, std::size_t trucks_in_window_with_truck, double delta_km,
                const FdConfig& fd) {
  const double eff = effective_from_count(trucks_in_window_with_truck, delta_km, fd);
  return rho_L_target <= fd::rho_star_L(eff, fd) + fd::kRelTol * fd.rho_L_max;
}

std::pair<std::size_t, std::size_t> windows_containing(const RoadGrid& grid, double x_km,
                                                       double delta_km) {
  const auto n = static_cast<long long>(grid.n_cells());
  const auto lo_guess = static_cast<long long>(std::floor((x_km - delta_km) / grid.dx_km - 0.5)) - 1;
  const auto hi_guess = static_cast<long long>(std::floor((x_km + delta_km) / grid.dx_km - 0.5)) + 2;
  long long lo = std::clamp(lo_guess, 0LL, n);
  long long hi = std::clamp(hi_guess, 0LL, n);
  auto inside = [&](long long i) {
    const double c = grid.cell_center_km(static_cast<std::size_t>(i));
    return x_km >= c - delta_km && x_km < c + delta_km;
  };
  while (lo < hi && !inside(lo)) ++lo;
  long long end = lo;
  while (end < hi && inside(end)) ++end;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(end)};
}

void refresh_registry(RoadGrid& grid, const Fleet& fleet) {
  grid.truck_registry.assign(grid.n_cells(), {});
  for (const auto& t : fleet.trucks) {
    if (t.x_km < 0 || t.x_km >= grid.length_km) continue;
    grid.truck_registry[grid.cell_of(t.x_km)].push_back(t.id);
  }
}

}  // namespace multiscale

MultiscaleSolver::MultiscaleSolver(FdConfig fd, MicroConfig micro, CouplingSchedule schedule,
                                   double dx_km, Exec exec)
    : fd_(std::move(fd)),
      micro_(micro),
      schedule_(schedule),
      substeps_(schedule.substeps()),
      exec_(exec),
      cars_(fd_, schedule.macro_dt_h, dx_km, MacroOptions{true, false, exec}) {
  micro_.validate();
  if (std::abs(micro_.euler_dt_h - schedule_.micro_dt_h) > 1e-12 * schedule_.micro_dt_h)
    throw ConfigError({"micro euler_dt must equal the coupling schedule's micro_dt"});
}

void MultiscaleSolver::refresh(MultiscaleState& s) const {
  s.effective_rho_H =
      multiscale::effective_density(s.fleet, s.grid, micro_.coupling_window_km, fd_);
  for (std::size_t i = 0; i < s.grid.n_cells(); ++i) s.grid.cells[i].rho_H = s.effective_rho_H[i];
  multiscale::refresh_registry(s.grid, s.fleet);
}

MacroStepReport MultiscaleSolver::car_step(MultiscaleState& s) {
  for (std::size_t i = 0; i < s.grid.n_cells(); ++i) s.grid.cells[i].rho_H = s.effective_rho_H[i];
  return cars_.step(s.grid);
}

void MultiscaleSolver::truck_substep(MultiscaleState& s, double t_h,
                                     MultiscaleStepReport& rep) const {
  auto& trucks = s.fleet.trucks;
  if (trucks.empty()) return;
  const double delta = micro_.coupling_window_km;

  std::vector<double> old_x(trucks.size());
  for (std::size_t k = 0; k < trucks.size(); ++k) old_x[k] = trucks[k].x_km;
  auto counts = [&] {
    std::vector<double> x = old_x;
    if (!std::is_sorted(x.begin(), x.end())) std::sort(x.begin(), x.end());
    std::vector<std::size_t> n(s.grid.n_cells());
    for (std::size_t i = 0; i < n.size(); ++i)
      n[i] = ftl::count_window(x, s.grid.cell_center_km(i), delta);
    return n;
  }();

  std::vector<double> rho_L(s.grid.n_cells());
  for (std::size_t i = 0; i < rho_L.size(); ++i) rho_L[i] = s.grid.cells[i].rho_L;
  const ftl::CarField field{rho_L, s.grid.dx_km};

  auto events = ftl::euler_step(s.fleet, field, t_h, micro_, fd_, {exec_, false});
  rep.collisions.insert(rep.collisions.end(), events.begin(), events.end());

  // Front to back, so a held truck is already in place when its follower is resolved.
  for (std::size_t k = trucks.size(); k-- > 0;) {
    auto& t = trucks[k];
    const double x0 = old_x[k];
    if (!(t.x_km > x0)) continue;
    if (k + 1 < trucks.size() && t.x_km >= trucks[k + 1].x_km) {
      // The leader was held short of where the Euler step assumed it would be.
      t.x_km = std::max(x0, std::nextafter(trucks[k + 1].x_km, -std::numeric_limits<double>::infinity()));
      t.v_kmh = 0.0;
      rep.collisions.push_back({t_h + micro_.euler_dt_h, t.id, trucks[k + 1].id});
    }
    const auto [a0, b0] = multiscale::windows_containing(s.grid, x0, delta);
    const auto [a1, b1] = multiscale::windows_containing(s.grid, t.x_km, delta);
    // Rounding can leave x0 between two adjacent windows, so test membership
    // rather than assuming the old and new ranges overlap.
    for (std::size_t i = a1; i < b1; ++i) {
      if (i >= a0 && i < b0) continue;
      if (!multiscale::entry_gate(rho_L[i], counts[i] + 1, delta, fd_)) {
        const double edge = s.grid.cell_center_km(i) - delta;
        t.x_km = std::max(x0, std::nextafter(edge, -std::numeric_limits<double>::infinity()));
        t.v_kmh = 0.0;
        rep.holds.push_back({t_h + micro_.euler_dt_h, t.id, i});
        break;
      }
    }
    const auto [a2, b2] = multiscale::windows_containing(s.grid, t.x_km, delta);
    for (std::size_t i = a0; i < b0; ++i)
      if (i < a2 || i >= b2) --counts[i];
    for (std::size_t i = a2; i < b2; ++i)
      if (i < a0 || i >= b0) ++counts[i];
  }
}

bool MultiscaleSolver::try_insert(MultiscaleState& s, const Truck& truck) const {
  const double delta = micro_.coupling_window_km;
  if (!s.fleet.trucks.empty() && s.fleet.trucks.front().x_km < micro_.delta_close_km) return false;
  const auto [a, b] = multiscale::windows_containing(s.grid, 0.0, delta);
  std::vector<double> x;
  for (const auto& t : s.fleet.trucks) x.push_back(t.x_km);
  for (std::size_t i = a; i < b; ++i) {
    const auto n = ftl::count_window(x, s.grid.cell_center_km(i), delta);
    if (!multiscale::entry_gate(s.grid.cells[i].rho_L, n + 1, delta, fd_)) return false;
  }
  Truck t = truck;
  t.x_km = 0.0;
  s.fleet.trucks.insert(s.fleet.trucks.begin(), t);
  return true;
}

MultiscaleStepReport MultiscaleSolver::step(MultiscaleState& s) {
  MultiscaleStepReport rep;
  refresh(s);
  rep.macro = car_step(s);
  for (int k = 0; k < substeps_; ++k) truck_substep(s, s.t_h + k * micro_.euler_dt_h, rep);
  s.t_h += schedule_.macro_dt_h;
  refresh(s);
  return rep;
}

MultiscaleStepReport multiscale_step(MultiscaleState& s, const CouplingSchedule& schedule,
                                     const FdConfig& fd, const MicroConfig& micro) {
  MicroConfig m = micro;
  m.euler_dt_h = schedule.micro_dt_h;
  MultiscaleSolver solver(fd, m, schedule, s.grid.dx_km);
  return solver.step(s);
}

}  // namespace twoflow

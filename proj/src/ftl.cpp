#include "twoflow/ftl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace twoflow {

void MicroConfig::validate() const {
  std::vector<std::string> p;
  if (!(delta_close_km > 0)) p.push_back("delta_close_km must be > 0");
  if (!(delta_far_km > delta_close_km)) p.push_back("delta_far_km must exceed delta_close_km");
  if (!(v_max_kmh > 0)) p.push_back("v_max_kmh must be > 0");
  if (!(tau_acc_h > 0)) p.push_back("tau_acc must be > 0");
  if (!(tau_dec_h > 0)) p.push_back("tau_dec must be > 0");
  if (!(euler_dt_h > 0)) p.push_back("euler_dt must be > 0");
  if (!(coupling_window_km > 0)) p.push_back("coupling_window_km must be > 0");
  if (!(coupling_slope_km >= 0)) p.push_back("coupling_slope_km must be >= 0");
  if (!p.empty()) throw ConfigError(p);
}

double SpeedProfile::at(double t) const {
  if (t_h.empty()) return 0.0;
  if (t <= t_h.front()) return v_kmh.front();
  if (t >= t_h.back()) return v_kmh.back();
  const auto it = std::upper_bound(t_h.begin(), t_h.end(), t);
  const auto j = static_cast<std::size_t>(it - t_h.begin());
  const double w = (t - t_h[j - 1]) / (t_h[j] - t_h[j - 1]);
  return v_kmh[j - 1] + w * (v_kmh[j] - v_kmh[j - 1]);
}

double Fleet::mean_gap_km() const {
  if (trucks.size() < 2) return 0.0;
  return (trucks.back().x_km - trucks.front().x_km) / static_cast<double>(trucks.size() - 1);
}

bool Fleet::ordered() const {
  for (std::size_t k = 1; k < trucks.size(); ++k)
    if (!(trucks[k - 1].x_km < trucks[k].x_km)) return false;
  return true;
}

namespace ftl {

double v_zz(double delta_km, double delta_close_km, double delta_far_km, double v_max_kmh) {
  if (delta_km <= delta_close_km) return 0.0;
  if (delta_km >= delta_far_km) return v_max_kmh;
  return v_max_kmh / (delta_far_km - delta_close_km) * (delta_km - delta_close_km);
}

GapParams coupled_gaps(double rho_L, double mean_gap_km, const MicroConfig& cfg,
                       const FdConfig& fd) {
  GapParams g{cfg.delta_close_km, cfg.delta_far_km};
  if (rho_L <= fd.transition_level || cfg.coupling_slope_km == 0.0 || !(mean_gap_km > 0)) return g;
  const double cars_between = rho_L * mean_gap_km;
  g.delta_close_km += cfg.coupling_slope_km * cars_between;
  g.delta_far_km += cfg.coupling_slope_km * cars_between;
  return g;
}

double relaxation(double v_target, double v_kmh, const MicroConfig& cfg) {
  const double tau = v_target >= v_kmh ? cfg.tau_acc_h : cfg.tau_dec_h;
  return (v_target - v_kmh) / tau;
}

double acceleration(double x_k, double x_next, double v_k, double rho_L_local,
                    const MicroConfig& cfg, const FdConfig& fd, double mean_gap_km) {
  if (!(x_next > x_k)) {
    std::ostringstream os;
    os << "non-positive gap between trucks at " << x_k << " and " << x_next << " km";
    throw CollisionError(os.str());
  }
  const auto g = coupled_gaps(rho_L_local, mean_gap_km, cfg, fd);
  return relaxation(v_zz(x_next - x_k, g.delta_close_km, g.delta_far_km, cfg.v_max_kmh), v_k, cfg);
}

std::size_t count_window(std::span<const double> sorted_x, double x_km, double delta_km) {
  const auto lo = std::lower_bound(sorted_x.begin(), sorted_x.end(), x_km - delta_km);
  const auto hi = std::lower_bound(lo, sorted_x.end(), x_km + delta_km);
  return static_cast<std::size_t>(hi - lo);
}

std::size_t count_window(const Fleet& fleet, double x_km, double delta_km) {
  std::size_t n = 0;
  for (const auto& t : fleet.trucks)
    if (t.x_km >= x_km - delta_km && t.x_km < x_km + delta_km) ++n;
  return n;
}

double CarField::at(double x_km) const {
  if (rho_L.empty()) return 0.0;
  if (!(x_km > 0)) return rho_L.front();
  const auto i = static_cast<std::size_t>(x_km / dx_km);
  return rho_L[std::min(i, rho_L.size() - 1)];
}

namespace {

inline double truck_accel(const Fleet& fleet, std::size_t k, const CarField& field,
                          const MicroConfig& cfg, const FdConfig& fd, double mean_gap) {
  const auto& t = fleet.trucks[k];
  if (fleet.scripts.contains(t.id)) return std::numeric_limits<double>::quiet_NaN();
  const double rho = field.at(t.x_km);
  const auto g = coupled_gaps(rho, mean_gap, cfg, fd);
  double target = cfg.v_max_kmh;
  if (k + 1 < fleet.trucks.size()) {
    const double gap = std::max(0.0, fleet.trucks[k + 1].x_km - t.x_km);
    target = v_zz(gap, g.delta_close_km, g.delta_far_km, cfg.v_max_kmh);
  } else if (fleet.downstream) {
    const double gap = std::max(0.0, fleet.downstream->x_km - t.x_km);
    target = v_zz(gap, g.delta_close_km, g.delta_far_km, cfg.v_max_kmh);
  }
  return relaxation(target, t.v_kmh, cfg);
}

}  // namespace

void accelerations_serial(const Fleet& fleet, const CarField& field, const MicroConfig& cfg,
                          const FdConfig& fd, std::span<double> accel) {
  const double mean_gap = fleet.mean_gap_km();
  const auto n = static_cast<std::ptrdiff_t>(fleet.trucks.size());
  for (std::ptrdiff_t k = 0; k < n; ++k)
    accel[k] = truck_accel(fleet, static_cast<std::size_t>(k), field, cfg, fd, mean_gap);
}

void accelerations_parallel(const Fleet& fleet, const CarField& field, const MicroConfig& cfg,
                            const FdConfig& fd, std::span<double> accel) {
  const double mean_gap = fleet.mean_gap_km();
  const auto n = static_cast<std::ptrdiff_t>(fleet.trucks.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t k = 0; k < n; ++k)
    accel[k] = truck_accel(fleet, static_cast<std::size_t>(k), field, cfg, fd, mean_gap);
}

std::vector<CollisionEvent> euler_step(Fleet& fleet, const CarField& field, double t_h,
                                       const MicroConfig& cfg, const FdConfig& fd,
                                       StepOptions opts) {
  const std::size_t n = fleet.trucks.size();
  std::vector<double> accel(n);
  if (opts.exec == Exec::Parallel)
    accelerations_parallel(fleet, field, cfg, fd, accel);
  else
    accelerations_serial(fleet, field, cfg, fd, accel);

  const double dt = cfg.euler_dt_h;
  const double t_new = t_h + dt;
  for (std::size_t k = 0; k < n; ++k) {
    auto& t = fleet.trucks[k];
    t.x_km += dt * t.v_kmh;
    if (std::isnan(accel[k]))
      t.v_kmh = std::max(0.0, fleet.scripts.at(t.id).at(t_new));
    else
      t.v_kmh = std::max(0.0, t.v_kmh + dt * accel[k]);
  }

  std::vector<CollisionEvent> events;
  for (std::size_t k = 1; k < n; ++k) {
    if (!(fleet.trucks[k - 1].x_km < fleet.trucks[k].x_km))
      events.push_back({t_new, fleet.trucks[k - 1].id, fleet.trucks[k].id});
  }
  if (opts.strict && !events.empty()) {
    std::ostringstream os;
    os << "collision: truck " << events.front().follower << " reached truck "
       << events.front().leader << " at t=" << t_new * 3600.0 << " s";
    throw CollisionError(os.str());
  }
  return events;
}

}  // namespace ftl
}  // namespace twoflow

#pragma once

// Second-order Follow-the-Leader dynamics for trucks in the slow lane.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "twoflow/ctm.hpp"
#include "twoflow/exec.hpp"
#include "twoflow/fd.hpp"

namespace twoflow {

struct MicroConfig {
  double delta_close_km = 25e-3;
  double delta_far_km = 50e-3;
  double v_max_kmh = 90.0;
  double tau_acc_h = 1.4e-2;
  double tau_dec_h = 2e-4;
  double euler_dt_h = 0.1 / 3600.0;
  double coupling_window_km = 50e-3;
  /// Growth of both gap parameters per car found between two trucks, above the
  /// transition level. Not calibrated; 0 keeps the gaps fixed.
  double coupling_slope_km = 0.0;

  static MicroConfig motorway() { return {}; }
  void validate() const;  // throws ConfigError

  bool operator==(const MicroConfig&) const = default;
};

struct Truck {
  TruckId id = 0;
  double x_km = 0.0;
  double v_kmh = 0.0;
  std::size_t road = 0;
  std::size_t path = 0;

  bool operator==(const Truck&) const = default;
};

/// Piecewise-linear speed vs. absolute time; held constant outside the knots.
struct SpeedProfile {
  std::vector<double> t_h;
  std::vector<double> v_kmh;

  double at(double t) const;
  bool operator==(const SpeedProfile&) const = default;
};

/// Something the front truck must follow that is not in this fleet, e.g. the
/// last truck on the downstream road, expressed in this road's coordinates.
struct Obstacle {
  double x_km = 0.0;
  double v_kmh = 0.0;
};

struct Fleet {
  std::vector<Truck> trucks;                // ascending position; back() is the leader
  std::map<TruckId, SpeedProfile> scripts;  // trucks whose speed is prescribed
  std::optional<Obstacle> downstream;       // leader of the front truck, if any

  std::size_t size() const { return trucks.size(); }
  bool empty() const { return trucks.empty(); }
  /// Mean distance between consecutive trucks; 0 for fewer than two trucks.
  double mean_gap_km() const;
  bool ordered() const;
};

struct CollisionEvent {
  double t_h = 0.0;
  TruckId follower = 0;
  TruckId leader = 0;
};

class CollisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace ftl {

/// Equilibrium speed for a gap: 0 on the plateau, linear ramp, then v_max.
double v_zz(double delta_km, double delta_close_km, double delta_far_km, double v_max_kmh);

struct GapParams {
  double delta_close_km;
  double delta_far_km;
};

/// Gap parameters as functions of the local car density. mean_gap_km is the
/// current mean inter-truck gap, used to count cars between two trucks.
GapParams coupled_gaps(double rho_L, double mean_gap_km, const MicroConfig& cfg, const FdConfig& fd);

/// Relaxation toward v_zz with separate acceleration/deceleration times (km/h^2).
double relaxation(double v_target, double v_kmh, const MicroConfig& cfg);

/// Coupled acceleration of truck k behind truck k+1. The leader's speed does
/// not enter. Throws CollisionError if x_next <= x_k.
double acceleration(double x_k, double x_next, double v_k, double rho_L_local,
                    const MicroConfig& cfg, const FdConfig& fd, double mean_gap_km = 0.0);

/// #{k : x_k in [x - delta, x + delta)} on an ascending position list.
std::size_t count_window(std::span<const double> sorted_x, double x_km, double delta_km);
std::size_t count_window(const Fleet& fleet, double x_km, double delta_km);

/// Car density seen by the trucks: one value per macro cell.
struct CarField {
  std::span<const double> rho_L;
  double dx_km = 0.1;

  double at(double x_km) const;
};

struct StepOptions {
  Exec exec = Exec::Parallel;
  bool strict = false;  // throw CollisionError instead of reporting
};

/// Target speeds and accelerations from a frozen snapshot; no state change.
/// accel[k] is the acceleration of truck k, or NaN for scripted trucks.
void accelerations_serial(const Fleet& fleet, const CarField& field, const MicroConfig& cfg,
                          const FdConfig& fd, std::span<double> accel);
void accelerations_parallel(const Fleet& fleet, const CarField& field, const MicroConfig& cfg,
                            const FdConfig& fd, std::span<double> accel);

/// One explicit Euler step of size cfg.euler_dt_h ending at t_h + dt.
/// Positions advance with the old velocity; velocities are clamped at 0.
std::vector<CollisionEvent> euler_step(Fleet& fleet, const CarField& field, double t_h,
                                       const MicroConfig& cfg, const FdConfig& fd,
                                       StepOptions opts = {});

}  // namespace ftl
}  // namespace twoflow

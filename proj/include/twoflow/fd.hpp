#pragma once

// Two-class (cars/trucks) fundamental diagrams with a partial/full coupling
// phase transition. Units are km, h, veh/km and veh/h throughout.

#include <stdexcept>
#include <string>
#include <vector>

namespace twoflow {

struct ClassParams {
  double vehicle_length_km = 0.0;  // length incl. safety distance
  int lanes_usable = 1;
  double v_max_kmh = 0.0;

  bool operator==(const ClassParams&) const = default;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parameters of both fundamental-diagram families plus the quantities derived
/// from them. Build with FdConfig::make so the derived fields stay consistent.
struct FdConfig {
  ClassParams light;
  ClassParams heavy;
  double beta = 0.0;
  double rho_L_max = 0.0;
  double rho_H_max = 0.0;
  double f_L_peak_free = 0.0;     // car peak flux at rho_H = 0
  double f_L_peak_jammed = 0.0;   // car peak flux at rho_H = rho_H_max
  double f_H_peak_free = 0.0;     // truck peak flux in the partial-coupling phase
  double v_L_star_jammed = 0.0;   // car free speed at rho_H = rho_H_max
  double transition_level = 0.0;  // car density separating D1 from D2

  static FdConfig make(ClassParams light, ClassParams heavy, double f_L_peak_free,
                       double f_L_peak_jammed, double f_H_peak_free, double v_L_star_jammed);

  /// Calibrated motorway values: 2 car lanes, 1 truck lane.
  static FdConfig motorway();

  /// Throws ConfigError listing every violated invariant.
  void validate() const;

  bool operator==(const FdConfig&) const = default;
};

struct TwoClassState {
  double rho_L = 0.0;
  double rho_H = 0.0;

  bool operator==(const TwoClassState&) const = default;
};

enum class PhaseRegion { PartialCoupling, FullCoupling };

namespace fd {

inline constexpr double kRelTol = 1e-9;

bool in_domain(const TwoClassState& s, const FdConfig& cfg);

double rho_star_L(double rho_H, const FdConfig& cfg);
double rho_star_H(double rho_L, const FdConfig& cfg);

double v_star_L(double rho_H, const FdConfig& cfg);
double sigma_L(double rho_H, const FdConfig& cfg);
double v_star_H(double rho_L, const FdConfig& cfg);
double sigma_H(double rho_L, const FdConfig& cfg);

double v_L(const TwoClassState& s, const FdConfig& cfg);
double f_L(const TwoClassState& s, const FdConfig& cfg);
double v_H(const TwoClassState& s, const FdConfig& cfg);
double f_H(const TwoClassState& s, const FdConfig& cfg);

PhaseRegion phase(const TwoClassState& s, const FdConfig& cfg);

/// Largest own-density characteristic speed |df_c/drho_c|, sampled by finite
/// differences on an n x n grid of the admissible domain.
double max_wave_speed(const FdConfig& cfg, int n = 200);

}  // namespace fd
}  // namespace twoflow

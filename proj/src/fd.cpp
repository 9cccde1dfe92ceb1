#include "twoflow/fd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace twoflow {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << "invalid configuration";
  for (const auto& p : problems) os << "; " << p;
  return os.str();
}

double tol(const FdConfig& cfg) { return fd::kRelTol * cfg.rho_L_max; }

double clamp_rho_H(double rho_H, const FdConfig& cfg, const char* where) {
  if (!(rho_H >= -tol(cfg) && rho_H <= cfg.rho_H_max + tol(cfg))) {
    std::ostringstream os;
    os << where << ": truck density " << rho_H << " outside [0, " << cfg.rho_H_max << "]";
    throw std::domain_error(os.str());
  }
  return std::clamp(rho_H, 0.0, cfg.rho_H_max);
}

double clamp_rho_L(double rho_L, const FdConfig& cfg, const char* where) {
  if (!(rho_L >= -tol(cfg) && rho_L <= cfg.rho_L_max + tol(cfg))) {
    std::ostringstream os;
    os << where << ": car density " << rho_L << " outside [0, " << cfg.rho_L_max << "]";
    throw std::domain_error(os.str());
  }
  return std::clamp(rho_L, 0.0, cfg.rho_L_max);
}

void require_domain(const TwoClassState& s, const FdConfig& cfg, const char* where) {
  if (!fd::in_domain(s, cfg)) {
    std::ostringstream os;
    os << where << ": state (" << s.rho_L << ", " << s.rho_H << ") is not admissible";
    throw std::domain_error(os.str());
  }
}

// Fraction of the way through the full-coupling phase, 0 at the transition
// level and 1 at rho_L_max.
double full_coupling_depth(double rho_L, const FdConfig& cfg) {
  if (rho_L <= cfg.transition_level) return 0.0;
  return (rho_L - cfg.transition_level) / (cfg.rho_L_max - cfg.transition_level);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument(join_problems(problems)), problems_(std::move(problems)) {}

FdConfig FdConfig::make(ClassParams light, ClassParams heavy, double f_L_peak_free,
                        double f_L_peak_jammed, double f_H_peak_free, double v_L_star_jammed) {
  FdConfig cfg;
  cfg.light = light;
  cfg.heavy = heavy;
  cfg.f_L_peak_free = f_L_peak_free;
  cfg.f_L_peak_jammed = f_L_peak_jammed;
  cfg.f_H_peak_free = f_H_peak_free;
  cfg.v_L_star_jammed = v_L_star_jammed;
  if (light.vehicle_length_km > 0 && heavy.vehicle_length_km > 0) {
    cfg.beta = light.vehicle_length_km / heavy.vehicle_length_km;
    cfg.rho_L_max = light.lanes_usable / light.vehicle_length_km;
    cfg.rho_H_max = heavy.lanes_usable / heavy.vehicle_length_km;
    cfg.transition_level = cfg.rho_L_max - cfg.rho_H_max / cfg.beta;
  }
  cfg.validate();
  return cfg;
}

FdConfig FdConfig::motorway() {
  return make({7.5e-3, 2, 130.0}, {18e-3, 1, 90.0}, 4200.0, 1200.0, 1500.0, 65.0);
}

void FdConfig::validate() const {
  std::vector<std::string> p;
  auto check_class = [&](const ClassParams& c, const char* name) {
    if (!(c.vehicle_length_km > 0)) p.push_back(std::string(name) + ".vehicle_length_km must be > 0");
    if (c.lanes_usable < 1) p.push_back(std::string(name) + ".lanes_usable must be >= 1");
    if (!(c.v_max_kmh > 0)) p.push_back(std::string(name) + ".v_max_kmh must be > 0");
  };
  check_class(light, "light");
  check_class(heavy, "heavy");
  if (!p.empty()) throw ConfigError(p);

  if (!(beta > 0 && beta < 1)) p.push_back("beta = l_L/l_H must lie in (0, 1)");
  if (!(transition_level > 0)) p.push_back("rho_L_max - rho_H_max/beta must be strictly positive");
  if (!(f_L_peak_free > 0)) p.push_back("f_L_peak_free must be > 0");
  if (!(f_L_peak_jammed > 0)) p.push_back("f_L_peak_jammed must be > 0");
  if (!(f_H_peak_free > 0)) p.push_back("f_H_peak_free must be > 0");
  if (!(v_L_star_jammed > 0 && v_L_star_jammed <= light.v_max_kmh))
    p.push_back("v_L_star_jammed must lie in (0, light.v_max_kmh]");
  if (f_L_peak_jammed > f_L_peak_free) p.push_back("f_L_peak_jammed must not exceed f_L_peak_free");
  if (p.empty()) {
    // Critical densities must sit strictly inside the jam densities.
    const double s_free = f_L_peak_free / light.v_max_kmh;
    const double s_jam = f_L_peak_jammed / v_L_star_jammed;
    if (!(s_free < rho_L_max)) p.push_back("car critical density at rho_H=0 must be < rho_L_max");
    if (!(s_jam < transition_level))
      p.push_back("car critical density at rho_H=rho_H_max must be < transition level");
    if (s_jam > s_free) p.push_back("car critical density must not increase with truck density");
    const double s_H = f_H_peak_free / heavy.v_max_kmh;
    if (!(s_H < rho_H_max)) p.push_back("truck critical density must be < rho_H_max");
    // sigma_H and rho*_H both shrink proportionally to (rho_L_max - rho_L) in D2.
    if (!(s_H / (rho_L_max - transition_level) < beta))
      p.push_back("truck critical density must stay below rho*_H in the full-coupling phase");
  }
  const double eps = 1e-9;
  if (light.vehicle_length_km > 0 && heavy.vehicle_length_km > 0) {
    if (std::abs(beta - light.vehicle_length_km / heavy.vehicle_length_km) > eps)
      p.push_back("beta inconsistent with vehicle lengths");
    if (std::abs(rho_L_max - light.lanes_usable / light.vehicle_length_km) > eps * rho_L_max)
      p.push_back("rho_L_max inconsistent with lanes/length");
    if (std::abs(rho_H_max - heavy.lanes_usable / heavy.vehicle_length_km) > eps * rho_L_max)
      p.push_back("rho_H_max inconsistent with lanes/length");
    if (beta > 0 && std::abs(transition_level - (rho_L_max - rho_H_max / beta)) > eps * rho_L_max)
      p.push_back("transition_level inconsistent with maxima");
  }
  if (!p.empty()) throw ConfigError(p);
}

namespace fd {

bool in_domain(const TwoClassState& s, const FdConfig& cfg) {
  const double t = tol(cfg);
  return s.rho_L >= -t && s.rho_L <= cfg.rho_L_max + t && s.rho_H >= -t &&
         s.rho_H <= cfg.rho_H_max + t && s.rho_L + s.rho_H / cfg.beta >= -t &&
         s.rho_L + s.rho_H / cfg.beta <= cfg.rho_L_max + t;
}

double rho_star_L(double rho_H, const FdConfig& cfg) {
  rho_H = clamp_rho_H(rho_H, cfg, "rho_star_L");
  return cfg.rho_L_max - rho_H / cfg.beta;
}

double rho_star_H(double rho_L, const FdConfig& cfg) {
  rho_L = clamp_rho_L(rho_L, cfg, "rho_star_H");
  return std::min(cfg.rho_H_max, cfg.beta * (cfg.rho_L_max - rho_L));
}

double v_star_L(double rho_H, const FdConfig& cfg) {
  rho_H = clamp_rho_H(rho_H, cfg, "v_star_L");
  const double w = rho_H / cfg.rho_H_max;
  return cfg.light.v_max_kmh + w * (cfg.v_L_star_jammed - cfg.light.v_max_kmh);
}

double sigma_L(double rho_H, const FdConfig& cfg) {
  rho_H = clamp_rho_H(rho_H, cfg, "sigma_L");
  const double w = rho_H / cfg.rho_H_max;
  const double s0 = cfg.f_L_peak_free / cfg.light.v_max_kmh;
  const double s1 = cfg.f_L_peak_jammed / cfg.v_L_star_jammed;
  return s0 + w * (s1 - s0);
}

double v_star_H(double rho_L, const FdConfig& cfg) {
  rho_L = clamp_rho_L(rho_L, cfg, "v_star_H");
  return cfg.heavy.v_max_kmh * (1.0 - full_coupling_depth(rho_L, cfg));
}

double sigma_H(double rho_L, const FdConfig& cfg) {
  rho_L = clamp_rho_L(rho_L, cfg, "sigma_H");
  return cfg.f_H_peak_free / cfg.heavy.v_max_kmh * (1.0 - full_coupling_depth(rho_L, cfg));
}

double f_L(const TwoClassState& s, const FdConfig& cfg) {
  require_domain(s, cfg, "f_L");
  const double rho_H = std::clamp(s.rho_H, 0.0, cfg.rho_H_max);
  const double jam = rho_star_L(rho_H, cfg);
  const double rho_L = std::clamp(s.rho_L, 0.0, jam);
  const double sig = sigma_L(rho_H, cfg);
  const double vs = v_star_L(rho_H, cfg);
  if (rho_L <= sig) return rho_L * vs;
  return vs * sig * (jam - rho_L) / (jam - sig);
}

double v_L(const TwoClassState& s, const FdConfig& cfg) {
  require_domain(s, cfg, "v_L");
  const double rho_H = std::clamp(s.rho_H, 0.0, cfg.rho_H_max);
  const double jam = rho_star_L(rho_H, cfg);
  const double rho_L = std::clamp(s.rho_L, 0.0, jam);
  const double sig = sigma_L(rho_H, cfg);
  const double vs = v_star_L(rho_H, cfg);
  if (rho_L <= sig) return vs;
  return vs * sig / (jam - sig) * (jam / rho_L - 1.0);
}

double f_H(const TwoClassState& s, const FdConfig& cfg) {
  require_domain(s, cfg, "f_H");
  const double rho_L = std::clamp(s.rho_L, 0.0, cfg.rho_L_max);
  const double jam = rho_star_H(rho_L, cfg);
  const double rho_H = std::clamp(s.rho_H, 0.0, jam);
  const double sig = sigma_H(rho_L, cfg);
  const double vs = v_star_H(rho_L, cfg);
  if (rho_H <= sig) return rho_H * vs;
  return vs * sig * (jam - rho_H) / (jam - sig);
}

double v_H(const TwoClassState& s, const FdConfig& cfg) {
  require_domain(s, cfg, "v_H");
  const double rho_L = std::clamp(s.rho_L, 0.0, cfg.rho_L_max);
  const double jam = rho_star_H(rho_L, cfg);
  const double rho_H = std::clamp(s.rho_H, 0.0, jam);
  const double sig = sigma_H(rho_L, cfg);
  const double vs = v_star_H(rho_L, cfg);
  if (rho_H <= sig) return vs;
  return vs * sig / (jam - sig) * (jam / rho_H - 1.0);
}

PhaseRegion phase(const TwoClassState& s, const FdConfig& cfg) {
  return s.rho_L <= cfg.transition_level ? PhaseRegion::PartialCoupling
                                         : PhaseRegion::FullCoupling;
}

double max_wave_speed(const FdConfig& cfg, int n) {
  double best = 0.0;
  const double hL = cfg.rho_L_max / n;
  const double hH = cfg.rho_H_max / n;
  for (int j = 0; j <= n; ++j) {
    const double rho_H = std::min(j * hH, cfg.rho_H_max);
    const double jam_L = rho_star_L(rho_H, cfg);
    for (int i = 0; i < n; ++i) {
      const double a = i * hL;
      const double b = a + hL;
      if (b > jam_L) break;
      const double d = (f_L({b, rho_H}, cfg) - f_L({a, rho_H}, cfg)) / hL;
      best = std::max(best, std::abs(d));
    }
  }
  for (int i = 0; i <= n; ++i) {
    const double rho_L = std::min(i * hL, cfg.rho_L_max);
    const double jam_H = rho_star_H(rho_L, cfg);
    for (int j = 0; j < n; ++j) {
      const double a = j * hH;
      const double b = a + hH;
      if (b > jam_H) break;
      const double d = (f_H({rho_L, b}, cfg) - f_H({rho_L, a}, cfg)) / hH;
      best = std::max(best, std::abs(d));
    }
  }
  return best;
}

}  // namespace fd
}  // namespace twoflow

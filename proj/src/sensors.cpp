#include "twoflow/sensors.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include <json.hpp>

namespace twoflow {

const char* to_string(VehicleClass c) { return c == VehicleClass::Light ? "light" : "heavy"; }

std::optional<VehicleClass> parse_vehicle_class(std::string_view s) {
  if (s == "light") return VehicleClass::Light;
  if (s == "heavy") return VehicleClass::Heavy;
  return std::nullopt;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_num(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc{} && r.ptr == end;
}

}  // namespace

IngestResult ingest_sensors(std::istream& in) {
  IngestResult res;
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kSensorHeader)
        res.errors.push_back({n, "expected header '" + std::string(kSensorHeader) + "'"});
      header = true;
      continue;
    }
    const auto f = split(line);
    if (f.size() != 6) {
      res.errors.push_back({n, "expected 6 fields, got " + std::to_string(f.size())});
      continue;
    }
    SensorRecord r;
    r.timestamp = std::string(f[0]);
    r.station_id = std::string(f[1]);
    std::vector<std::string> bad;
    if (!parse_num(f[2], r.lane) || r.lane < 1) bad.push_back("lane must be a positive integer");
    if (auto c = parse_vehicle_class(f[3])) r.cls = *c;
    else bad.push_back("class must be light or heavy");
    if (!parse_num(f[4], r.flux_veh_h) || !(r.flux_veh_h >= 0)) bad.push_back("flux must be a number >= 0");
    if (!parse_num(f[5], r.speed_kmh) || !(r.speed_kmh >= 0)) bad.push_back("speed must be a number >= 0");
    if (r.timestamp.empty()) bad.push_back("empty timestamp");
    if (!bad.empty()) {
      std::string msg = bad.front();
      for (std::size_t k = 1; k < bad.size(); ++k) msg += "; " + bad[k];
      res.errors.push_back({n, msg});
      continue;
    }
    const double rem = std::fmod(r.flux_veh_h, 60.0);
    if (std::min(rem, 60.0 - rem) > 1e-6)
      res.warnings.push_back({n, "flux " + std::string(f[4]) + " is not a multiple of 60"});
    if (r.speed_kmh > 0) r.density = r.flux_veh_h / r.speed_kmh;
    res.records.push_back(std::move(r));
  }
  if (!header) res.errors.push_back({0, "empty input"});
  return res;
}

IngestResult ingest_sensors(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  return ingest_sensors(in);
}

std::string format_sensors(std::span<const SensorRecord> records) {
  std::ostringstream os;
  os.precision(17);
  os << kSensorHeader << '\n';
  for (const auto& r : records)
    os << r.timestamp << ',' << r.station_id << ',' << r.lane << ',' << to_string(r.cls) << ','
       << r.flux_veh_h << ',' << r.speed_kmh << '\n';
  return os.str();
}

std::vector<FlowSample> aggregate(std::span<const SensorRecord> records, VehicleClass cls) {
  struct Acc {
    double flux = 0.0;
    double density = 0.0;
    bool has_density = false;
    double stopped_flux = 0.0;
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;  // (timestamp, station)
  for (const auto& r : records) {
    if (r.cls != cls) continue;
    if (cls == VehicleClass::Heavy && r.lane != 1) continue;
    auto& a = acc[{r.timestamp, r.station_id}];
    a.flux += r.flux_veh_h;
    if (r.density) {
      a.density += *r.density;
      a.has_density = true;
    } else {
      a.stopped_flux += r.flux_veh_h;
    }
  }
  std::vector<FlowSample> out;
  out.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    FlowSample s{key.first, key.second, a.flux, 0.0, std::nullopt};
    // A lane without a speed reading makes the density of the whole sample unknown.
    if (a.has_density && a.stopped_flux == 0.0 && a.density > 0) {
      s.density = a.density;
      s.speed_kmh = a.flux / a.density;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> gaussian_smooth(std::span<const double> values, double sigma_samples,
                                    int half_window) {
  std::vector<double> w(2 * half_window + 1);
  for (int k = -half_window; k <= half_window; ++k)
    w[k + half_window] = std::exp(-0.5 * k * k / (sigma_samples * sigma_samples));
  const auto n = static_cast<long>(values.size());
  std::vector<double> out(values.size());
  for (long i = 0; i < n; ++i) {
    double s = 0.0, ws = 0.0;
    for (int k = -half_window; k <= half_window; ++k) {
      const long j = i + k;
      if (j < 0 || j >= n) continue;
      s += w[k + half_window] * values[j];
      ws += w[k + half_window];
    }
    out[i] = s / ws;
  }
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::ranges::sort(v);
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

FdFitReport fit_fd(std::span<const FlowSample> samples, VehicleClass cls, int lanes,
                   const FdConfig& base, FitOptions opts) {
  if (lanes < 1) throw FitError("lane count must be >= 1");
  FdFitReport r;
  r.cls = cls;
  r.lanes = lanes;
  const auto& params = cls == VehicleClass::Light ? base.light : base.heavy;
  r.vehicle_length_km = opts.vehicle_length_km > 0 ? opts.vehicle_length_km : params.vehicle_length_km;

  std::vector<double> rho, flux;
  for (const auto& s : samples)
    if (s.density) {
      rho.push_back(*s.density);
      flux.push_back(s.flux_veh_h);
    }
  r.n_samples = rho.size();
  if (rho.size() < opts.min_samples)
    throw FitError("insufficient data: " + std::to_string(rho.size()) + " usable samples, need " +
                   std::to_string(opts.min_samples));

  const double cut = quantile(rho, opts.low_density_quantile);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k)
    if (rho[k] <= cut) {
      num += rho[k] * flux[k];
      den += rho[k] * rho[k];
    }
  if (!(den > 0)) throw FitError("degenerate fit: no positive densities in the low-density range");
  r.v_max_kmh = num / den;
  r.peak_flux = quantile(flux, opts.peak_quantile);
  r.rho_max = lanes / r.vehicle_length_km;
  r.sigma = r.peak_flux / r.v_max_kmh;
  if (!(r.sigma < r.rho_max)) {
    std::ostringstream os;
    os << "degenerate fit: critical density " << r.sigma << " >= maximal density " << r.rho_max;
    throw FitError(os.str());
  }

  double sf = 0.0, sc = 0.0;
  r.bin_counts.assign(10, 0);
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const bool free = rho[k] <= r.sigma;
    const double pred = free ? r.v_max_kmh * rho[k]
                             : r.peak_flux * (r.rho_max - rho[k]) / (r.rho_max - r.sigma);
    const double e = flux[k] - pred;
    (free ? sf : sc) += e * e;
    ++(free ? r.n_free : r.n_congested);
    const auto b = static_cast<std::size_t>(std::clamp(rho[k] / r.rho_max * 10.0, 0.0, 9.0));
    ++r.bin_counts[b];
  }
  r.rms_free = r.n_free ? std::sqrt(sf / static_cast<double>(r.n_free)) : 0.0;
  r.rms_congested = r.n_congested ? std::sqrt(sc / static_cast<double>(r.n_congested)) : 0.0;
  // Samples just past sigma are the top flux quantile itself, not congestion.
  if (*std::max_element(rho.begin(), rho.end()) < 1.1 * r.sigma)
    r.flags.push_back("no congested samples: peak flux estimated from free-flow data only, unreliable");

  ClassParams light = base.light, heavy = base.heavy;
  double fLf = base.f_L_peak_free, fLj = base.f_L_peak_jammed, fHf = base.f_H_peak_free;
  if (cls == VehicleClass::Light) {
    light = {r.vehicle_length_km, lanes, r.v_max_kmh};
    fLf = r.peak_flux;
  } else {
    heavy = {r.vehicle_length_km, lanes, r.v_max_kmh};
    fHf = r.peak_flux;
  }
  try {
    r.fitted = FdConfig::make(light, heavy, fLf, fLj, fHf, base.v_L_star_jammed);
  } catch (const ConfigError& e) {
    throw FitError(std::string("fitted parameters are inconsistent: ") + e.what());
  }
  return r;
}

std::string fit_report_json(const FdFitReport& r) {
  nlohmann::json j{{"class", to_string(r.cls)},
                   {"lanes", r.lanes},
                   {"vehicle_length_km", r.vehicle_length_km},
                   {"v_max_kmh", r.v_max_kmh},
                   {"peak_flux", r.peak_flux},
                   {"rho_max", r.rho_max},
                   {"sigma", r.sigma},
                   {"rms_free", r.rms_free},
                   {"rms_congested", r.rms_congested},
                   {"n_samples", r.n_samples},
                   {"n_free", r.n_free},
                   {"n_congested", r.n_congested},
                   {"bin_counts", r.bin_counts},
                   {"flags", r.flags}};
  return j.dump(2) + "\n";
}

std::vector<SensorRecord> synthetic_records(const FdConfig& cfg, VehicleClass cls, std::size_t n,
                                            double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> eps(0.0, noise);
  const bool light = cls == VehicleClass::Light;
  const double vmax = light ? cfg.light.v_max_kmh : cfg.heavy.v_max_kmh;
  const double peak = light ? cfg.f_L_peak_free : cfg.f_H_peak_free;
  const double rmax = light ? cfg.rho_L_max : cfg.rho_H_max;
  const double sigma = peak / vmax;
  const int lanes = light ? cfg.light.lanes_usable : 1;

  std::vector<SensorRecord> out;
  for (std::size_t k = 0; k < n; ++k) {
    const double rho = u(rng) < 0.7 ? u(rng) * sigma : sigma + u(rng) * (rmax - sigma);
    const double f0 = light ? fd::f_L({rho, 0.0}, cfg) : fd::f_H({0.0, rho}, cfg);
    const double f = f0 * (1.0 + eps(rng));
    if (!(rho > 0) || !(f > 0)) continue;
    const double v = f / rho;
    const std::chrono::year_month_day day{std::chrono::sys_days{std::chrono::year{2019} / 1 / 1} +
                                          std::chrono::days{static_cast<long>(k / 1440)}};
    char ts[64];
    std::snprintf(ts, sizeof ts, "%04d-%02u-%02uT%02zu:%02zu:00", static_cast<int>(day.year()),
                  static_cast<unsigned>(day.month()), static_cast<unsigned>(day.day()), (k / 60) % 24, k % 60);
    if (light) {
      // Uneven lane split; every lane runs at the sample speed.
      double left = f;
      for (int l = 1; l <= lanes; ++l) {
        const double share = l == lanes ? left : f * (0.6 / lanes + 0.8 * u(rng) / lanes);
        left -= share;
        out.push_back({ts, "S1", l, cls, share, v, share / v});
      }
    } else {
      out.push_back({ts, "S1", 1, cls, f, v, rho});
      out.push_back({ts, "S1", 2, cls, 0.1 * f, v, 0.1 * rho});
    }
  }
  return out;
}

}  // namespace twoflow

#pragma once

// Loop-detector records, their aggregation, and triangular FD calibration.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "twoflow/fd.hpp"

namespace twoflow {

enum class VehicleClass { Light, Heavy };

const char* to_string(VehicleClass c);
std::optional<VehicleClass> parse_vehicle_class(std::string_view s);

struct SensorRecord {
  std::string timestamp;  // ISO-8601
  std::string station_id;
  int lane = 1;  // 1 = slow lane
  VehicleClass cls = VehicleClass::Light;
  double flux_veh_h = 0.0;
  double speed_kmh = 0.0;
  std::optional<double> density;  // flux / speed, only when speed > 0
};

struct IngestIssue {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  std::vector<SensorRecord> records;
  std::vector<IngestIssue> warnings;
  std::vector<IngestIssue> errors;
};

inline constexpr std::string_view kSensorHeader = "timestamp,station_id,lane,class,flux,speed";

IngestResult ingest_sensors(std::istream& in);
IngestResult ingest_sensors(std::string_view csv);
std::string format_sensors(std::span<const SensorRecord> records);

/// One (station, minute) observation for a class after lane aggregation.
struct FlowSample {
  std::string timestamp;
  std::string station_id;
  double flux_veh_h = 0.0;
  double speed_kmh = 0.0;
  std::optional<double> density;
};

/// Light: all lanes summed, space-mean speed. Heavy: slow lane only.
std::vector<FlowSample> aggregate(std::span<const SensorRecord> records, VehicleClass cls);

/// Truncated Gaussian filter over consecutive samples (display only).
std::vector<double> gaussian_smooth(std::span<const double> values, double sigma_samples = 1.0,
                                    int half_window = 2);

struct FitOptions {
  double vehicle_length_km = 0.0;  // 0: take it from the base FdConfig
  double low_density_quantile = 0.2;
  double peak_quantile = 0.98;
  std::size_t min_samples = 100;
};

struct FdFitReport {
  VehicleClass cls = VehicleClass::Light;
  int lanes = 1;
  double vehicle_length_km = 0.0;
  double v_max_kmh = 0.0;
  double peak_flux = 0.0;
  double rho_max = 0.0;
  double sigma = 0.0;
  double rms_free = 0.0;
  double rms_congested = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_free = 0;
  std::size_t n_congested = 0;
  std::vector<std::size_t> bin_counts;  // 10 equal density bins on [0, rho_max]
  std::vector<std::string> flags;
  FdConfig fitted;  // base configuration with this class's fields replaced
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double quantile(std::vector<double> values, double q);

/// Throws FitError on too few samples or a degenerate fit (sigma >= rho_max).
FdFitReport fit_fd(std::span<const FlowSample> samples, VehicleClass cls, int lanes,
                   const FdConfig& base = FdConfig::motorway(), FitOptions opts = {});

std::string fit_report_json(const FdFitReport& r);

/// Minute records drawn from the FD of `cfg`: 70% free-flow, 30% congested,
/// Gaussian multiplicative flux noise with relative standard deviation `noise`. Light flux is split over the
/// car lanes; heavy records are in lane 1 plus ignored lane-2 rows.
std::vector<SensorRecord> synthetic_records(const FdConfig& cfg, VehicleClass cls, std::size_t n,
                                            double noise, std::uint64_t seed);

}  // namespace twoflow

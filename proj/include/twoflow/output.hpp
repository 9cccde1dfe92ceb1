#pragma once

// CSV and manifest emitters for simulation results.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "twoflow/simulation.hpp"

namespace twoflow {

/// Shortest round-trip decimal form.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

/// Header "t_s,<cell centers>", then one row per output time.
std::string field_csv(const std::vector<double>& times_s, const std::vector<double>& centers_km,
                      const FieldMatrix& rows);
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

struct WrittenFile {
  std::string name;
  std::uint64_t hash = 0;
};

/// Writes `<road>_<class>_<quantity>.csv` files, trajectories.csv (multi-scale),
/// and manifest.json into `dir` (created if missing). Throws std::runtime_error
/// naming the path on I/O failure. Returns the data files in write order.
std::vector<WrittenFile> write_outputs(const RunResult& result, const std::string& dir);

/// Writes a text file, throwing std::runtime_error with the path on failure.
void write_text_file(const std::string& path, std::string_view text);

}  // namespace twoflow

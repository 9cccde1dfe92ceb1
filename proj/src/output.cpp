#include "twoflow/output.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#ifndef TWOFLOW_GIT_DESCRIBE
#define TWOFLOW_GIT_DESCRIBE "unknown"
#endif

namespace twoflow {

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string field_csv(const std::vector<double>& times_s, const std::vector<double>& centers_km,
                      const FieldMatrix& rows) {
  std::string out = "t_s";
  for (double c : centers_km) out += "," + format_double(c);
  out += '\n';
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out += format_double(times_s[k]);
    for (double v : rows[k]) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = "t_s,truck_id,road_id,x_km,v_kmh\n";
  for (const auto& r : rows) {
    out += format_double(r.t_s) + ',' + std::to_string(r.truck) + ',' + std::to_string(r.road) + ',' +
           format_double(r.x_km) + ',' + format_double(r.v_kmh) + '\n';
  }
  return out;
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<WrittenFile> write_outputs(const RunResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());

  std::vector<WrittenFile> files;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text_file((fs::path(dir) / name).string(), text);
    files.push_back({name, fnv1a64(text)});
  };
  for (const auto& road : result.roads)
    for (const auto& [key, rows] : road.fields)
      emit(road.id + "_" + key + ".csv", field_csv(result.times_s, road.centers_km, rows));
  if (result.scenario.model == ModelKind::Multiscale) emit("trajectories.csv", trajectory_csv(result.trajectories));

  nlohmann::json m;
  m["scenario"] = result.scenario.name;
  m["config_hash"] = hex64(scenario_hash(result.scenario));
  m["git_describe"] = TWOFLOW_GIT_DESCRIBE;
  m["wall_time_s"] = result.wall_time_s;
  m["output_rows"] = result.times_s.size();
  m["macro_steps"] = result.stats.macro_steps;
  m["collisions"] = result.stats.collisions;
  nlohmann::json f = nlohmann::json::object();
  for (const auto& w : files) f[w.name] = hex64(w.hash);
  m["files"] = f;
  write_text_file((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
  return files;
}

}  // namespace twoflow

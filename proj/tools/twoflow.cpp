// twoflow: run scenarios, built-in demos, FD calibration and self-validation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "twoflow/ctm.hpp"
#include "twoflow/demos.hpp"
#include "twoflow/output.hpp"
#include "twoflow/scenario.hpp"
#include "twoflow/sensors.hpp"
#include "twoflow/simulation.hpp"
#include "twoflow/validation.hpp"

namespace {

namespace fs = std::filesystem;
using namespace twoflow;

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;

std::string default_out() {
  const char* env = std::getenv("TWOFLOW_OUT");
  return env && *env ? env : "twoflow_out";
}

// Maps exceptions to exit codes: bad input is 2, anything else 3.
template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ScenarioError& e) {
    std::cerr << "error: invalid scenario\n";
    for (const auto& m : e.errors()) std::cerr << "  " << m << "\n";
    return kInvalid;
  } catch (const CflError& e) {
    std::cerr << "error: " << e.what() << " (max stable dt " << e.max_dt_h() * 3600.0 << " s)\n";
    return kInvalid;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const FitError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
}

void report_run(const RunResult& r, const std::string& dir) {
  std::cout << "scenario " << r.scenario.name << ": " << r.stats.macro_steps << " steps, " << r.times_s.size()
            << " output rows, " << r.wall_time_s << " s wall\n";
  if (r.scenario.model == ModelKind::Multiscale)
    std::cout << "  trucks inserted " << r.stats.inserted << ", transferred " << r.stats.transfers << ", exited "
              << r.stats.exited << ", gate holds " << r.stats.gate_holds << ", collisions " << r.stats.collisions
              << "\n";
  std::cout << "  outputs in " << dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-class traffic simulator: macroscopic CTM and multi-scale truck model"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario file");
  std::string scenario_path, out_dir = default_out();
  std::optional<double> dt_s, dx_km;
  std::uint64_t seed = 0;
  bool serial = false;
  run->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  run->add_option("--out", out_dir, "Output directory (default $TWOFLOW_OUT)");
  run->add_option("--dt-s", dt_s, "Macro time step in seconds");
  run->add_option("--dx-km", dx_km, "Cell length in km");
  run->add_option("--seed", seed, "Accepted for forward compatibility; the models are deterministic");
  run->add_flag("--serial", serial, "Use the serial kernels");

  auto* demo = app.add_subcommand("demo", "Run a built-in scenario and summarize its checks");
  std::string demo_name;
  bool sweep = false;
  demo->add_option("name", demo_name, "Demo name")->required()->check(CLI::IsMember(demo_names()));
  demo->add_option("--out", out_dir, "Output directory (default $TWOFLOW_OUT)");
  demo->add_flag("--sweep", sweep, "stopgo only: sweep tau_acc and delta_close");

  auto* calibrate = app.add_subcommand("calibrate", "Fit a triangular FD to sensor minute data");
  std::string data_path, cls_name, fd_out, base_fd;
  int lanes = 0;
  calibrate->add_option("--data", data_path, "Sensor CSV")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--class", cls_name, "light or heavy")->required()->check(CLI::IsMember({"light", "heavy"}));
  calibrate->add_option("--lanes", lanes, "Lanes used by the class")->required()->check(CLI::PositiveNumber);
  calibrate->add_option("--out", fd_out, "FD parameter file to write")->required();
  calibrate->add_option("--base", base_fd, "FD file supplying the other class (default motorway values)");

  auto* validate = app.add_subcommand("validate", "Run the invariant suite");
  std::string validate_scenario;
  double validate_dx = 0.1;
  validate->add_option("--scenario", validate_scenario, "Take FD and micro parameters from this scenario");
  validate->add_option("--dx-km", validate_dx, "Cell length for the solver checks");

  CLI11_PARSE(app, argc, argv);
  const auto exec = serial ? Exec::Serial : Exec::Parallel;

  if (*run) {
    return guarded([&] {
      if (!fs::exists(scenario_path)) throw std::invalid_argument("scenario file '" + scenario_path + "' not found");
      auto s = load_scenario(scenario_path);
      if (dt_s) s.dt_s = *dt_s;
      if (dx_km) s.dx_km = *dx_km;
      Simulation sim(s, exec);
      const auto result = sim.run();
      write_outputs(result, out_dir);
      report_run(result, out_dir);
      return kOk;
    });
  }

  if (*demo) {
    return guarded([&] {
      const auto dir = (fs::path(out_dir) / demo_name).string();
      if (sweep) {
        if (demo_name != "stopgo") throw std::invalid_argument("--sweep applies to the stopgo demo only");
        const auto table = stopgo_sweep();
        fs::create_directories(dir);
        write_text_file((fs::path(dir) / "sweep.csv").string(), table);
        std::cout << table;
        return kOk;
      }
      Simulation sim(demo_scenario(demo_name), exec);
      const auto result = sim.run();
      write_outputs(result, dir);
      const auto summary = summarize_demo(demo_name, result);
      write_text_file((fs::path(dir) / "summary.txt").string(), summary.text());
      report_run(result, dir);
      std::cout << summary.text();
      return kOk;
    });
  }

  if (*calibrate) {
    return guarded([&] {
      std::ifstream in(data_path);
      if (!in) throw std::invalid_argument("cannot read '" + data_path + "'");
      const auto ingest = ingest_sensors(in);
      for (const auto& w : ingest.warnings) std::cerr << "warning: line " << w.line << ": " << w.message << "\n";
      if (!ingest.errors.empty()) {
        for (const auto& e : ingest.errors) std::cerr << "error: line " << e.line << ": " << e.message << "\n";
        return kInvalid;
      }
      const auto cls = *parse_vehicle_class(cls_name);
      const auto base = base_fd.empty() ? FdConfig::motorway() : read_fd_file(base_fd);
      const auto report = fit_fd(aggregate(ingest.records, cls), cls, lanes, base);
      write_fd_file(fd_out, report.fitted);
      std::cout << fit_report_json(report) << "\n";
      return kOk;
    });
  }

  return guarded([&] {
    ValidationOptions opts;
    opts.dx_km = validate_dx;
    if (!validate_scenario.empty()) {
      const auto s = load_scenario(validate_scenario);
      opts.fd = s.fd;
      opts.micro = s.micro.to_config();
    }
    const auto checks = validation_suite(opts);
    std::cout << format_checks(checks);
    bool ok = true;
    for (const auto& c : checks) ok = ok && c.passed;
    std::cout << (ok ? "all checks passed\n" : "some checks failed\n");
    return ok ? kOk : kRuntime;
  });
}

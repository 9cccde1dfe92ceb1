#pragma once

// Self-checks run by `twoflow validate` and the acceptance binary.

#include <string>
#include <vector>

#include "twoflow/exec.hpp"
#include "twoflow/fd.hpp"
#include "twoflow/ftl.hpp"

namespace twoflow {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct ValidationOptions {
  FdConfig fd = FdConfig::motorway();
  MicroConfig micro = MicroConfig::motorway();
  double dx_km = 0.1;
  Exec exec = Exec::Parallel;
};

/// Corner values of the motorway FD: maxima, speeds and peak fluxes.
CheckResult check_fd_endpoints(const FdConfig& fd);
/// Monotonicity, zero flux, concavity, cross-decrease, decoupling and
/// continuity on an n x n grid of the admissible domain.
CheckResult check_fd_properties(const FdConfig& fd, int n = 100);
/// Closed road, both masses constant to 1e-10 relative.
CheckResult check_conservation(const FdConfig& fd, double dx_km, std::size_t steps = 10000,
                               Exec exec = Exec::Parallel);
/// Cars only, 20 | 200: shock front after 0.1 h vs. Rankine-Hugoniot.
CheckResult check_riemann_shock(const FdConfig& fd, double dx_km, Exec exec = Exec::Parallel);
/// Cars only, 200 | 20: both edges of the rarefaction after 0.1 h.
CheckResult check_riemann_rarefaction(const FdConfig& fd, double dx_km, Exec exec = Exec::Parallel);
/// Follower accelerating behind a distant leader vs. 90 (1 - exp(-t / tau_acc)).
CheckResult check_relaxation(const MicroConfig& micro, const FdConfig& fd);
/// Platoon behind a stopped leader settles at spacing <= delta_close + 1e-4.
CheckResult check_jam_spacing(const MicroConfig& micro, const FdConfig& fd);
/// Fit of synthetic sensor data with 2% noise recovers the generating FD.
CheckResult check_calibration(const FdConfig& fd);

/// Every check above; configuration errors surface as failed entries.
std::vector<CheckResult> validation_suite(const ValidationOptions& opts = {});

std::string format_checks(const std::vector<CheckResult>& checks);

}  // namespace twoflow

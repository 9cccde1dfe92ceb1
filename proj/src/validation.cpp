#include "twoflow/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "twoflow/ctm.hpp"
#include "twoflow/sensors.hpp"

namespace twoflow {

namespace {

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

CheckResult timed(const std::string& name, const std::function<CheckResult()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = e.what();
  }
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

double stable_dt_h(double dx_km, const FdConfig& fd) { return 0.95 * ctm::max_stable_dt_h(dx_km, fd); }

// Position where the profile crosses `level`, scanning left to right,
// interpolated between cell centers.
double crossing(const RoadGrid& g, double level) {
  for (std::size_t i = 1; i < g.n_cells(); ++i) {
    const double a = g.cells[i - 1].rho_L - level, b = g.cells[i].rho_L - level;
    if ((a < 0) != (b < 0)) return g.cell_center_km(i - 1) + g.dx_km * a / (a - b);
  }
  return std::nan("");
}

RoadGrid riemann(const FdConfig& fd, double dx_km, double left, double right, double x0, double length,
                 double t_h, Exec exec) {
  auto g = RoadGrid::uniform(length, dx_km);
  for (std::size_t i = 0; i < g.n_cells(); ++i) g.cells[i] = {g.cell_center_km(i) < x0 ? left : right, 0.0};
  CtmSolver solver(fd, stable_dt_h(dx_km, fd), dx_km, MacroOptions{true, true, exec});
  const auto steps = static_cast<std::size_t>(std::llround(t_h / solver.dt_h()));
  for (std::size_t k = 0; k < steps; ++k) solver.step(g);
  return g;
}

struct Tally {
  std::size_t points = 0;
  std::size_t failures = 0;
  std::string first;

  void expect(bool ok, const std::string& what) {
    ++points;
    if (ok) return;
    if (failures++ == 0) first = what;
  }
};

}  // namespace

CheckResult check_fd_endpoints(const FdConfig& fd) {
  return timed("fd endpoints", [&] {
    const double H = fd.rho_H_max;
    const double vals[] = {fd.rho_L_max,
                           fd.transition_level,
                           fd::v_L({0, 0}, fd),
                           fd::v_star_L(H, fd),
                           fd::v_H({0, 0}, fd),
                           fd::v_star_H(fd.rho_L_max, fd),
                           fd::v_star_L(0, fd) * fd::sigma_L(0, fd),
                           fd::v_star_L(H, fd) * fd::sigma_L(H, fd),
                           fd::v_star_H(0, fd) * fd::sigma_H(0, fd),
                           fd::v_star_H(fd.rho_L_max, fd) * fd::sigma_H(fd.rho_L_max, fd)};
    const double want[] = {267, 133, 130, 65, 90, 0, 4200, 1200, 1500, 0};
    const double tol[] = {1, 1, 1e-9, 1e-9, 1e-9, 1e-9, 1e-6, 1e-6, 1e-6, 1e-9};
    CheckResult r{"", true, ""};
    for (int k = 0; k < 10; ++k)
      if (std::abs(vals[k] - want[k]) > tol[k]) r.passed = false;
    r.detail = fmt("max densities (%.2f, %.2f), speeds (%.1f, %.1f)", vals[0], vals[1], vals[2], vals[3]) +
               fmt(" (%.1f, %.1f), peaks (%.1f, %.1f)", vals[4], vals[5], vals[6], vals[7]) +
               fmt(" (%.1f, %.1f)", vals[8], vals[9]);
    return r;
  });
}

CheckResult check_fd_properties(const FdConfig& fd, int n) {
  return timed("fd property grid", [&] {
    Tally t;
    const double hL = fd.rho_L_max / (n - 1), hH = fd.rho_H_max / (n - 1);
    const double ftol = 1e-9 * fd.f_L_peak_free;
    auto admissible = [&](double l, double h) { return l + h / fd.beta <= fd.rho_L_max * (1 + 1e-12); };
    for (int j = 0; j < n; ++j) {
      const double h = j * hH;
      const double jam = fd::rho_star_L(h, fd);
      t.expect(std::abs(fd::f_L({0, h}, fd)) <= 1e-9 && std::abs(fd::f_L({jam, h}, fd)) <= 1e-9,
               fmt("car zero flux at rho_H=%.3f", h));
      t.expect(std::abs(fd::v_L({jam, h}, fd)) <= 1e-9, fmt("car jam speed at rho_H=%.3f", h));
      double pv = 1e300, pf[2] = {0, 0};
      int seen = 0;
      for (int i = 0; i < n; ++i) {
        const double l = i * hL;
        if (!admissible(l, h)) break;
        const TwoClassState s{l, h};
        const double v = fd::v_L(s, fd), f = fd::f_L(s, fd);
        t.expect(v <= pv + 1e-9, fmt("v_L increases in rho_L at (%.2f, %.2f)", l, h));
        t.expect(v <= fd::v_star_L(h, fd) + 1e-9, fmt("v_L above its maximum at (%.2f, %.2f)", l, h));
        if (seen >= 2) t.expect(f - 2 * pf[1] + pf[0] <= ftol, fmt("f_L not concave at (%.2f, %.2f)", l, h));
        pf[0] = pf[1];
        pf[1] = f;
        pv = v;
        ++seen;
      }
    }
    for (int i = 0; i < n; ++i) {
      const double l = i * hL;
      const double jam = fd::rho_star_H(l, fd);
      t.expect(std::abs(fd::f_H({l, 0}, fd)) <= 1e-9 && std::abs(fd::f_H({l, jam}, fd)) <= 1e-9,
               fmt("truck zero flux at rho_L=%.3f", l));
      t.expect(std::abs(fd::v_H({l, jam}, fd)) <= 1e-9, fmt("truck jam speed at rho_L=%.3f", l));
      double pvH = 1e300, pvL = 1e300, pfL = 1e300, pf[2] = {0, 0};
      int seen = 0;
      for (int j = 0; j < n; ++j) {
        const double h = j * hH;
        if (!admissible(l, h)) break;
        const TwoClassState s{l, h};
        const double vH = fd::v_H(s, fd), fH = fd::f_H(s, fd), vL = fd::v_L(s, fd), fL = fd::f_L(s, fd);
        t.expect(vH <= pvH + 1e-9, fmt("v_H increases in rho_H at (%.2f, %.2f)", l, h));
        t.expect(vL <= pvL + 1e-9, fmt("v_L increases in rho_H at (%.2f, %.2f)", l, h));
        t.expect(fL <= pfL + ftol, fmt("f_L increases in rho_H at (%.2f, %.2f)", l, h));
        if (seen >= 2) t.expect(fH - 2 * pf[1] + pf[0] <= ftol, fmt("f_H not concave at (%.2f, %.2f)", l, h));
        pf[0] = pf[1];
        pf[1] = fH;
        pvH = vH;
        pvL = vL;
        pfL = fL;
        ++seen;
      }
    }
    for (int j = 0; j < n; ++j) {
      const double h = j * hH;
      double pvH = 1e300, pfH = 1e300;
      const double ref = fd::v_H({0, h}, fd);
      for (int i = 0; i < n; ++i) {
        const double l = i * hL;
        if (!admissible(l, h)) break;
        const TwoClassState s{l, h};
        const double vH = fd::v_H(s, fd), fH = fd::f_H(s, fd);
        t.expect(vH <= pvH + 1e-9, fmt("v_H increases in rho_L at (%.2f, %.2f)", l, h));
        t.expect(fH <= pfH + ftol, fmt("f_H increases in rho_L at (%.2f, %.2f)", l, h));
        if (l <= fd.transition_level)
          t.expect(std::abs(vH - ref) <= 1e-9, fmt("v_H depends on rho_L in D1 at (%.2f, %.2f)", l, h));
        pvH = vH;
        pfH = fH;
      }
    }
    // Left and right limits at the transition level.
    const double T = fd.transition_level, e = 1e-10;
    for (int j = 0; j < n; ++j) {
      const double h = std::min(j * hH, fd.beta * (fd.rho_L_max - T - e));
      const TwoClassState a{T - e, h}, b{T + e, h};
      t.expect(std::abs(fd::v_L(a, fd) - fd::v_L(b, fd)) <= 1e-7 && std::abs(fd::v_H(a, fd) - fd::v_H(b, fd)) <= 1e-7 &&
                   std::abs(fd::f_L(a, fd) - fd::f_L(b, fd)) <= 1e-7 && std::abs(fd::f_H(a, fd) - fd::f_H(b, fd)) <= 1e-7,
               fmt("discontinuity at the transition level for rho_H=%.3f", h));
    }
    if (fd.light.lanes_usable == 2 && fd.heavy.lanes_usable == 1)
      t.expect(std::abs(fd.transition_level - fd.rho_L_max / 2) <= 1e-12 * fd.rho_L_max,
               "transition level differs from rho_L_max / 2");
    CheckResult r;
    r.passed = t.failures == 0;
    r.detail = fmt("%.0f assertions on a %.0f x %.0f grid, %.0f failed", double(t.points), n, n, double(t.failures));
    if (t.failures) r.detail += "; first: " + t.first;
    return r;
  });
}

CheckResult check_conservation(const FdConfig& fd, double dx_km, std::size_t steps, Exec exec) {
  return timed("conservation (closed road)", [&] {
    auto g = RoadGrid::uniform(10.0, dx_km);
    g.left_bc = g.right_bc = BoundaryCondition::closed();
    for (std::size_t i = 0; i < g.n_cells(); ++i) {
      const double x = g.cell_center_km(i);
      g.cells[i] = {120 + 80 * std::sin(x), 20 + 15 * std::cos(2 * x)};
    }
    const double mL = g.mass_L(), mH = g.mass_H();
    CtmSolver solver(fd, stable_dt_h(dx_km, fd), dx_km, MacroOptions{true, true, exec});
    for (std::size_t k = 0; k < steps; ++k) solver.step(g);
    const double eL = std::abs(g.mass_L() - mL) / mL, eH = std::abs(g.mass_H() - mH) / mH;
    return CheckResult{"", eL <= 1e-10 && eH <= 1e-10,
                       fmt("%.0f steps, relative mass drift cars %.2e, trucks %.2e", double(steps), eL, eH)};
  });
}

CheckResult check_riemann_shock(const FdConfig& fd, double dx_km, Exec exec) {
  return timed("Riemann shock 20|200", [&] {
    const double fl = fd::f_L({20, 0}, fd), fr = fd::f_L({200, 0}, fd);
    const double speed = (fr - fl) / 180.0;
    const double x0 = 5.0, t = 0.1;
    const auto g = riemann(fd, dx_km, 20, 200, x0, 10.0, t, exec);
    const double x = crossing(g, 110.0);
    const double want = x0 + speed * t;
    return CheckResult{"", std::abs(speed + 7.81) < 0.01 && std::abs(x - want) <= dx_km,
                       fmt("speed %.3f km/h, front %.3f km vs %.3f km (dx %.3f)", speed, x, want, dx_km)};
  });
}

CheckResult check_riemann_rarefaction(const FdConfig& fd, double dx_km, Exec exec) {
  return timed("Riemann rarefaction 200|20", [&] {
    const double sigma = fd::sigma_L(0, fd), jam = fd.rho_L_max, v = fd::v_star_L(0, fd);
    const double back = -v * sigma / (jam - sigma);  // congested-branch characteristic
    const double x0 = 5.0, t = 0.1;
    const auto g = riemann(fd, dx_km, 200, 20, x0, 20.0, t, exec);
    const double tail = crossing(g, 0.5 * (200 + sigma));
    // Head: last crossing of the lower level.
    double head = std::nan("");
    for (std::size_t i = g.n_cells() - 1; i > 0 && std::isnan(head); --i) {
      const double a = g.cells[i - 1].rho_L - 0.5 * (sigma + 20), b = g.cells[i].rho_L - 0.5 * (sigma + 20);
      if ((a < 0) != (b < 0)) head = g.cell_center_km(i - 1) + g.dx_km * a / (a - b);
    }
    const double want_tail = x0 + back * t, want_head = x0 + v * t;
    return CheckResult{"", std::abs(tail - want_tail) <= dx_km && std::abs(head - want_head) <= dx_km,
                       fmt("tail %.3f vs %.3f km, head %.3f vs %.3f km", tail, want_tail, head, want_head)};
  });
}

namespace {

// Follower from rest behind a leader far ahead at v_max; returns |v - exact| at t.
double relaxation_error(MicroConfig cfg, const FdConfig& fd, double dt_h, double t_h, double* v_out = nullptr) {
  cfg.euler_dt_h = dt_h;
  Fleet f;
  f.trucks = {{0, 0.0, 0.0, 0, 0}, {1, 1.0, cfg.v_max_kmh, 0, 0}};
  f.scripts[1] = SpeedProfile{{0.0}, {cfg.v_max_kmh}};
  const auto steps = static_cast<std::size_t>(std::llround(t_h / dt_h));
  for (std::size_t k = 0; k < steps; ++k)
    ftl::euler_step(f, {}, static_cast<double>(k) * dt_h, cfg, fd, {Exec::Serial, true});
  const double v = f.trucks.front().v_kmh;
  if (v_out) *v_out = v;
  return std::abs(v - cfg.v_max_kmh * (1 - std::exp(-t_h / cfg.tau_acc_h)));
}

}  // namespace

CheckResult check_relaxation(const MicroConfig& micro, const FdConfig& fd) {
  return timed("FtL relaxation", [&] {
    micro.validate();
    double v = 0;
    const double t3 = 3 * micro.tau_acc_h;
    const double exact = micro.v_max_kmh * (1 - std::exp(-3.0));
    const double e3 = relaxation_error(micro, fd, micro.euler_dt_h, t3, &v);
    const double e1 = relaxation_error(micro, fd, micro.euler_dt_h, 5 * micro.tau_acc_h);
    const double e2 = relaxation_error(micro, fd, micro.euler_dt_h / 2, 5 * micro.tau_acc_h);
    const double ratio = e1 / e2;
    return CheckResult{"", e3 <= 0.02 * exact && ratio > 1.8 && ratio < 2.2,
                       fmt("v(3 tau_acc) %.4f vs %.4f km/h; error ratio for dt/2 %.3f", v, exact, ratio)};
  });
}

CheckResult check_jam_spacing(const MicroConfig& micro, const FdConfig& fd) {
  return timed("jam spacing", [&] {
    micro.validate();
    Fleet f;
    const std::size_t n = 20;
    for (std::size_t k = 0; k < n; ++k) f.trucks.push_back({static_cast<TruckId>(k), 0.1 * double(k), 0.0, 0, 0});
    f.scripts[static_cast<TruckId>(n - 1)] = SpeedProfile{{0.0}, {0.0}};
    const double horizon_h = 900.0 / 3600.0;
    const auto steps = static_cast<std::size_t>(std::llround(horizon_h / micro.euler_dt_h));
    for (std::size_t k = 0; k < steps; ++k)
      ftl::euler_step(f, {}, static_cast<double>(k) * micro.euler_dt_h, micro, fd, {Exec::Serial, true});
    double lo = 1e300, hi = 0;
    for (std::size_t k = 1; k < n; ++k) {
      const double gap = f.trucks[k].x_km - f.trucks[k - 1].x_km;
      lo = std::min(lo, gap);
      hi = std::max(hi, gap);
    }
    const double density = double(n - 1) / (f.trucks.back().x_km - f.trucks.front().x_km);
    return CheckResult{"", lo > 0 && hi <= micro.delta_close_km + 1e-4,
                       fmt("spacing [%.5f, %.5f] km, platoon density %.2f veh/km", lo, hi, density)};
  });
}

CheckResult check_calibration(const FdConfig& fd) {
  return timed("calibration round trip", [&] {
    std::ostringstream os;
    bool ok = true;
    for (auto cls : {VehicleClass::Light, VehicleClass::Heavy}) {
      const bool light = cls == VehicleClass::Light;
      const auto recs = synthetic_records(fd, cls, 100000, 0.02, light ? 11 : 12);
      const auto samples = aggregate(recs, cls);
      const int lanes = light ? fd.light.lanes_usable : fd.heavy.lanes_usable;
      const auto rep = fit_fd(samples, cls, lanes, fd);
      const double vmax = light ? fd.light.v_max_kmh : fd.heavy.v_max_kmh;
      const double peak = light ? fd.f_L_peak_free : fd.f_H_peak_free;
      const double rho = lanes / (light ? fd.light.vehicle_length_km : fd.heavy.vehicle_length_km);
      const double ev = std::abs(rep.v_max_kmh - vmax) / vmax, ep = std::abs(rep.peak_flux - peak) / peak;
      ok = ok && ev <= 0.02 && ep <= 0.02 && rep.rho_max == rho;
      os << to_string(cls) << fmt(": v_max %.2f (%.2f%%), peak %.1f (%.2f%%)", rep.v_max_kmh, 100 * ev,
                                  rep.peak_flux, 100 * ep)
         << fmt(", rho_max %.4f; ", rep.rho_max);
    }
    auto d = os.str();
    d.resize(d.size() - 2);
    return CheckResult{"", ok, d};
  });
}

std::vector<CheckResult> validation_suite(const ValidationOptions& o) {
  std::vector<CheckResult> out;
  auto config = timed("configuration", [&] {
    o.fd.validate();
    o.micro.validate();
    RoadGrid::uniform(20.0, o.dx_km);  // grid-size guard shared by the solver checks
    return CheckResult{"", true, fmt("dx %.4g km, CFL bound %.4f s", o.dx_km, ctm::max_stable_dt_h(o.dx_km, o.fd) * 3600)};
  });
  out.push_back(config);
  if (!config.passed) return out;
  out.push_back(check_fd_endpoints(o.fd));
  out.push_back(check_fd_properties(o.fd));
  out.push_back(check_conservation(o.fd, o.dx_km, 10000, o.exec));
  out.push_back(check_riemann_shock(o.fd, o.dx_km, o.exec));
  out.push_back(check_riemann_rarefaction(o.fd, o.dx_km, o.exec));
  out.push_back(check_relaxation(o.micro, o.fd));
  out.push_back(check_jam_spacing(o.micro, o.fd));
  out.push_back(check_calibration(o.fd));
  return out;
}

std::string format_checks(const std::vector<CheckResult>& checks) {
  std::ostringstream os;
  for (const auto& c : checks) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-4s %-30s %7.3fs  ", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.seconds);
    os << buf << c.detail << "\n";
  }
  return os.str();
}

}  // namespace twoflow

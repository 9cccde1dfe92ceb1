#include "twoflow/demos.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace twoflow {

namespace {

using Kind = BoundaryCondition::Kind;

BcSpec dirichlet(double rho_L, double rho_H, double from_s = 0.0) {
  BcSpec b;
  b.from_s = from_s;
  b.kind = Kind::Dirichlet;
  b.rho_L = rho_L;
  b.rho_H = rho_H;
  return b;
}

Scenario base(std::string name, ModelKind model, double horizon_s) {
  Scenario s;
  s.name = std::move(name);
  s.model = model;
  s.dt_s = model == ModelKind::Macro ? 2.6 : 2.0;
  s.horizon_s = horizon_s;
  return s;
}

RoadSpec road(std::string id, double length_km = 10.0) {
  RoadSpec r;
  r.id = std::move(id);
  r.length_km = length_km;
  return r;
}

Piece flat(double from, double to, double v) { return {from, to, v, 0.0, 1.0}; }

Scenario test1a() {
  auto s = base("test1a", ModelKind::Macro, 600.0);
  auto r = road("road");
  r.light = {flat(0, 10, 10)};
  r.heavy = {flat(0, 10, 13)};
  r.left_bc = {dirichlet(10, 13)};
  r.right_bc = {dirichlet(10, s.fd.rho_H_max)};
  s.roads = {r};
  return s;
}

Scenario test2a() {
  auto s = base("test2a", ModelKind::Macro, 900.0);
  auto r = road("road");
  r.light = {flat(0, 10, 10)};
  r.heavy = {flat(0, 10, 8)};
  r.left_bc = {dirichlet(10, 8)};
  r.right_bc = {dirichlet(186, 8)};
  s.roads = {r};
  return s;
}

Scenario test3a() {
  auto s = base("test3a", ModelKind::Macro, 900.0);
  auto r = road("road");
  const double T = s.fd.transition_level;
  r.light = {{0, 10, T + 4, 3, 1.0}};
  r.heavy = {flat(0, 9, 12), flat(9, 10, 30)};
  s.roads = {r};
  return s;
}

Scenario test1b() {
  auto s = base("test1b", ModelKind::Multiscale, 480.0);
  auto r = road("road");
  r.light = {flat(0, 10, 10)};
  r.left_bc = {dirichlet(10, 13)};
  r.truck_fill = TruckFill{2.0, 8.95, 1.0 / 13.0, 90.0};
  r.trucks = {{9.0, 90.0, 0, {{0, 90}, {20, 0}}}};
  s.roads = {r};
  return s;
}

Scenario test2b() {
  auto s = base("test2b", ModelKind::Multiscale, 1800.0);
  auto r = road("road");
  r.light = {flat(0, 10, 10)};
  r.left_bc = {dirichlet(10, 0)};
  r.right_bc = {dirichlet(250, 0), dirichlet(10, 0, 900.0)};
  r.truck_fill = TruckFill{0.0, 10.0, 0.125, 90.0};
  r.truck_inflow = TruckInflow{5.0, 90.0, 0.0, std::numeric_limits<double>::infinity(), 0};
  s.roads = {r};
  return s;
}

Scenario test3b() {
  auto s = base("test3b", ModelKind::Multiscale, 1800.0);
  auto in1 = road("in1", 10.0);
  auto in2 = road("in2", 10.0);
  auto out = road("out", 10.0);
  in1.truck_inflow = TruckInflow{4.0, 90.0, 0.0, 900.0, 0};
  in2.truck_inflow = TruckInflow{4.0, 90.0, 0.0, 900.0, 1};
  in2.left_bc = {dirichlet(32, 0)};
  s.roads = {in1, in2, out};
  JunctionSpec j;
  j.kind = "merge";
  j.incoming = {"in1", "in2"};
  j.outgoing = {"out"};
  s.junctions = {j};
  s.paths = {{"in1", "out"}, {"in2", "out"}};
  return s;
}

constexpr double kStopgoSlowdownS = 150.0;
constexpr double kEntranceMarginKm = 0.5;

Scenario stopgo() {
  auto s = base("stopgo", ModelKind::Multiscale, 900.0);
  s.output.interval_s = 2.0;
  auto r = road("road");
  // Platoon at 0.125 km (720 veh/h at 90 km/h) behind a leader that brakes to a halt.
  r.truck_fill = TruckFill{0.5, 4.0, 0.125, 90.0};
  r.trucks = {{4.125, 90.0, 0, {{0, 90}, {kStopgoSlowdownS, 90}, {kStopgoSlowdownS + 15, 0},
                                {kStopgoSlowdownS + 45, 0}, {kStopgoSlowdownS + 75, 90}}}};
  r.truck_inflow = TruckInflow{5.0, 90.0, 0.0, 300.0, 0};
  s.roads = {r};
  return s;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::size_t road_index(const RunResult& r, std::string_view id) {
  for (std::size_t k = 0; k < r.roads.size(); ++k)
    if (r.roads[k].id == id) return k;
  throw std::out_of_range("no road '" + std::string(id) + "' in result");
}

// Row index of the first output time >= t.
std::size_t row_at(const RunResult& r, double t_s) {
  for (std::size_t k = 0; k < r.times_s.size(); ++k)
    if (r.times_s[k] >= t_s - 1e-9) return k;
  return r.times_s.size() - 1;
}

DemoSummary sum_test1a(const RunResult& r) {
  DemoSummary out{"test1a", {}, {}};
  const auto& fd = r.scenario.fd;
  const auto& rhoL = field(r, "road", "light_density");
  const auto& rhoH = field(r, "road", "heavy_density");
  const auto& vL = field(r, "road", "light_velocity");
  const auto& vH = field(r, "road", "heavy_velocity");
  const auto& fL = field(r, "road", "light_flux");
  const auto last = r.times_s.size() - 1;

  std::vector<std::size_t> jam;
  for (std::size_t i = 0; i < rhoH[last].size(); ++i)
    if (rhoH[last][i] >= 0.99 * fd.rho_H_max) jam.push_back(i);
  double vh_max = 0, vl_lo = 1e300, vl_hi = -1e300, fl_min = 1e300;
  for (auto i : jam) {
    vh_max = std::max(vh_max, vH[last][i]);
    vl_lo = std::min(vl_lo, vL[last][i]);
    vl_hi = std::max(vl_hi, vL[last][i]);
    fl_min = std::min(fl_min, fL[last][i]);
  }
  double rho_L_peak = 0;
  for (const auto& row : rhoL)
    for (double v : row) rho_L_peak = std::max(rho_L_peak, v);

  const bool has_jam = jam.size() >= 3;
  out.notes.push_back(fmt("truck jam cells at final time: %.0f (%.1f km)", double(jam.size()),
                          double(jam.size()) * r.scenario.dx_km));
  out.checks.push_back({"truck speed 0 in jam", has_jam && vh_max < 0.5,
                        fmt("max truck speed in jam %.4f km/h", vh_max)});
  out.checks.push_back({"car speed 65+-1 in jam", has_jam && vl_lo >= 64 && vl_hi <= 66,
                        fmt("car speed in jam [%.3f, %.3f] km/h", vl_lo, vl_hi)});
  out.checks.push_back({"car flux through jam > 0", has_jam && fl_min > 0,
                        fmt("min car flux in jam %.1f veh/h", fl_min)});
  out.checks.push_back({"partial coupling everywhere", rho_L_peak <= fd.transition_level,
                        fmt("max car density %.2f vs transition level %.2f", rho_L_peak, fd.transition_level)});
  return out;
}

DemoSummary sum_test2a(const RunResult& r) {
  DemoSummary out{"test2a", {}, {}};
  const auto& fd = r.scenario.fd;
  const auto& rhoL = field(r, "road", "light_density");
  const auto& vL = field(r, "road", "light_velocity");
  const auto& vH = field(r, "road", "heavy_velocity");
  const auto k0 = row_at(r, r.scenario.horizon_s / 2);
  const auto last = r.times_s.size() - 1;
  double minL = 1e300, minH = 1e300;
  for (auto k = k0; k <= last; ++k)
    for (std::size_t i = 0; i < vL[k].size(); ++i) {
      minL = std::min(minL, vL[k][i]);
      minH = std::min(minH, vH[k][i]);
    }
  out.checks.push_back({"both classes proceed slowly without stopping", minL > 0 && minH > 0,
                        fmt("min speeds after transient: cars %.2f, trucks %.2f km/h", minL, minH)});

  // Congested region at the final time: cells slowed below 90% of the inflow
  // car speed, which must reach at least one km upstream of the boundary.
  const auto& centers = road_record(r, "road").centers_km;
  const double v_in = vL[last].front();
  const double L = r.scenario.roads.front().length_km;
  double peak = 0, front = L;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (vL[last][i] >= 0.9 * v_in) continue;
    front = std::min(front, centers[i]);
    peak = std::max(peak, rhoL[last][i]);
  }
  const bool wave = front <= L - 1.0;
  out.notes.push_back(fmt("car congestion front at %.2f km at t=%.0f s", front, r.times_s[last]));
  out.checks.push_back({"backward car density below transition level", wave && peak < fd.transition_level,
                        fmt("max car density in the backward wave %.2f vs transition level %.2f", peak,
                            fd.transition_level)});
  return out;
}

// Leftmost cell whose value exceeds the midpoint between background and peak.
double bump_rear(const std::vector<double>& row, const std::vector<double>& centers, double level) {
  for (std::size_t i = 0; i < row.size(); ++i)
    if (row[i] > level) return centers[i];
  return std::numeric_limits<double>::quiet_NaN();
}

DemoSummary sum_test3a(const RunResult& r) {
  DemoSummary out{"test3a", {}, {}};
  const auto& rhoH = field(r, "road", "heavy_density");
  const auto& centers = road_record(r, "road").centers_km;
  const auto k = row_at(r, 900.0);
  const auto [lo0, hi0] = std::ranges::minmax(rhoH.front());
  const auto [lo, hi] = std::ranges::minmax(rhoH[k]);
  const double amp0 = hi0 - lo0;
  const double amp = hi - lo;
  const double mid = 0.5 * (lo0 + hi0);
  const double x0 = bump_rear(rhoH.front(), centers, mid);
  const double x1 = bump_rear(rhoH[k], centers, 0.5 * (lo + hi));
  out.checks.push_back({"amplitude >= 25% of initial at t=0.25 h", amp >= 0.25 * amp0,
                        fmt("amplitude %.2f of initial %.2f veh/km", amp, amp0)});
  out.checks.push_back({"bump propagates upstream", x1 < x0 - r.scenario.dx_km,
                        fmt("bump rear edge %.2f km -> %.2f km", x0, x1)});
  return out;
}

// Trucks of the final row on a road, by position.
std::vector<TrajectoryRow> final_trucks(const RunResult& r, std::size_t road) {
  std::vector<TrajectoryRow> out;
  if (r.trajectories.empty()) return out;
  const double t = r.trajectories.back().t_s;
  for (auto it = r.trajectories.rbegin(); it != r.trajectories.rend() && it->t_s == t; ++it)
    if (it->road == road) out.push_back(*it);
  std::ranges::sort(out, {}, &TrajectoryRow::x_km);
  return out;
}

DemoSummary sum_test1b(const RunResult& r) {
  DemoSummary out{"test1b", {}, {}};
  const auto& vL = field(r, "road", "light_velocity");
  const auto& neff = field(r, "road", "heavy_effective");
  const auto& centers = road_record(r, "road").centers_km;
  const double delta = r.scenario.micro.coupling_window_km;
  const auto trucks = final_trucks(r, 0);
  double xa = 1e300, xb = -1e300;
  std::size_t stopped = 0;
  for (const auto& t : trucks)
    if (t.v_kmh < 1.0) {
      xa = std::min(xa, t.x_km);
      xb = std::max(xb, t.x_km);
      ++stopped;
    }
  const auto last = vL.size() - 1;
  // A car crossing the queue region: length over travel time, cell by cell.
  double lo = 1e300, hi = -1e300, pace = 0, eff = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i] - delta < xa || centers[i] + delta > xb) continue;
    lo = std::min(lo, vL[last][i]);
    hi = std::max(hi, vL[last][i]);
    pace += 1.0 / std::max(vL[last][i], 1e-12);
    eff += neff[last][i];
    ++n;
  }
  const double through = n ? double(n) / pace : 0.0;
  out.notes.push_back(fmt("queue of %.0f stopped trucks spans %.2f km", double(stopped), stopped ? xb - xa : 0.0));
  if (stopped) out.notes.push_back(fmt("queue from km %.2f to km %.2f", xa, xb));
  out.notes.push_back(fmt("mean effective truck density in queue %.2f veh/km", n ? eff / double(n) : 0.0));
  out.notes.push_back(fmt("cell car speeds in queue span [%.2f, %.2f] km/h", n ? lo : 0.0, n ? hi : 0.0));
  out.checks.push_back({"car speed 65+-2 through truck queue", n >= 3 && std::abs(through - 65.0) <= 2.0,
                        fmt("travel speed across %.0f queue cells %.2f km/h", double(n), through)});
  return out;
}

DemoSummary sum_test2b(const RunResult& r) {
  DemoSummary out{"test2b", {}, {}};
  const double release = r.scenario.roads.front().right_bc.back().from_s;
  std::map<TruckId, double> first_stop;
  std::set<TruckId> recovered;
  for (const auto& t : r.trajectories) {
    // Only stops caused by the jam; later entrance waits have no time left to clear.
    if (t.v_kmh <= 1e-3 && t.t_s < release && !first_stop.contains(t.truck)) first_stop[t.truck] = t.t_s;
    if (auto it = first_stop.find(t.truck); it != first_stop.end() && t.t_s > it->second && t.v_kmh > 1.0)
      recovered.insert(t.truck);
  }
  double first = 1e300;
  for (const auto& [id, t] : first_stop) first = std::min(first, t);
  out.notes.push_back(fmt("car jam released at t=%.0f s; gate holds %.0f", release, double(r.stats.gate_holds)));
  out.checks.push_back({"trucks reach V=0", !first_stop.empty(),
                        fmt("%.0f trucks stopped, first at t=%.0f s", double(first_stop.size()),
                            first_stop.empty() ? 0.0 : first)});
  out.checks.push_back({"stopped trucks recover V>0 after the jam clears",
                        !first_stop.empty() && recovered.size() == first_stop.size(),
                        fmt("%.0f of %.0f stopped trucks moved again", double(recovered.size()),
                            double(first_stop.size()))});
  return out;
}

// Trucks slower than `v` and their rearmost distance from the road end.
struct Queue {
  std::size_t n = 0;
  double length_km = 0.0;
};

std::map<double, Queue> queues(const RunResult& r, std::size_t road, double L, double v = 5.0) {
  std::map<double, Queue> q;
  for (double t : r.times_s) q[t];
  for (const auto& t : r.trajectories) {
    if (t.road != road || t.v_kmh >= v) continue;
    auto& e = q[t.t_s];
    ++e.n;
    e.length_km = std::max(e.length_km, L - t.x_km);
  }
  return q;
}

DemoSummary sum_test3b(const RunResult& r) {
  DemoSummary out{"test3b", {}, {}};
  const auto i1 = road_index(r, "in1"), i2 = road_index(r, "in2"), io = road_index(r, "out");
  const double L1 = r.scenario.roads[i1].length_km, L2 = r.scenario.roads[i2].length_km;
  const auto q1 = queues(r, i1, L1), q2 = queues(r, i2, L2);
  std::size_t max1 = 0, max2 = 0;
  double len1 = 0, len2 = 0, diff = 0;
  for (const auto& [t, a] : q1) {
    const auto& b = q2.at(t);
    max1 = std::max(max1, a.n);
    max2 = std::max(max2, b.n);
    len1 = std::max(len1, a.length_km);
    len2 = std::max(len2, b.length_km);
    diff = std::max(diff, std::abs(a.length_km - b.length_km));
  }
  out.checks.push_back({"queues on both incoming roads", max1 >= 5 && max2 >= 5,
                        fmt("max queued trucks in1 %.0f, in2 %.0f", double(max1), double(max2))});
  out.checks.push_back({"queues differ", diff >= r.scenario.micro.delta_close_km,
                        fmt("max queue length in1 %.2f km, in2 %.2f km", len1, len2) +
                            fmt("; largest simultaneous difference %.3f km", diff, 0.0)});

  // Merge throughput in the five minutes after the inflow stops.
  const double release = r.scenario.roads[i1].truck_inflow->until_s;
  std::size_t moved = 0, peak_window = 0;
  std::vector<double> times;
  for (const auto& tr : r.transfers)
    if (tr.to == io) {
      times.push_back(tr.t_h * 3600.0);
      if (times.back() >= release && times.back() < release + 300.0) ++moved;
    }
  for (std::size_t a = 0, b = 0; b < times.size(); ++b) {
    while (times[b] - times[a] >= 300.0) ++a;
    if (times[b] >= 300.0) peak_window = std::max(peak_window, b - a + 1);
  }
  const double flux = double(moved) * 12.0;
  const bool queued_at_release = q1.lower_bound(release)->second.n + q2.lower_bound(release)->second.n > 0;
  out.notes.push_back(fmt("busiest 5-minute merge throughput %.0f veh/h", double(peak_window) * 12.0));
  out.checks.push_back({"post-release 5-minute truck outflow < 1500 veh/h",
                        queued_at_release && flux < r.scenario.fd.f_H_peak_free,
                        fmt("%.0f veh/h over [%.0f s, +300 s)", flux, release)});

  // Downstream cars stay in free flow.
  const auto& rhoL = field(r, "out", "light_density");
  const auto& neff = field(r, "out", "heavy_effective");
  const auto& fd = r.scenario.fd;
  double worst = -1e300;
  for (std::size_t k = 0; k < rhoL.size(); ++k)
    for (std::size_t i = 0; i < rhoL[k].size(); ++i)
      worst = std::max(worst, rhoL[k][i] - fd::sigma_L(std::min(neff[k][i], fd.rho_H_max), fd));
  out.checks.push_back({"no car spillback downstream", worst <= 1e-6,
                        fmt("max car density above critical on the outgoing road %.3f veh/km", worst)});
  return out;
}

DemoSummary sum_stopgo(const RunResult& r) {
  DemoSummary out{"stopgo", {}, {}};
  const auto& lead = r.scenario.roads.front().trucks.front();
  const double x_slow = lead.x_km + lead.v_kmh * kStopgoSlowdownS / 3600.0;
  const auto q = stopgo_queue(r, x_slow);
  out.notes.push_back(fmt("slowdown starts at km %.2f, t=%.0f s", x_slow, kStopgoSlowdownS));
  out.notes.push_back(fmt("backward queue extent %.2f km, duration %.2f min", q.upstream_km, q.duration_min));
  out.checks.push_back({"follower stops later and further upstream",
                        q.stopped && q.upstream_km > 0 && q.last_stop_s > kStopgoSlowdownS,
                        fmt("rearmost stop %.2f km upstream, last stop at t=%.0f s", q.upstream_km, q.last_stop_s)});
  return out;
}

}  // namespace

std::vector<std::string> demo_names() {
  return {"test1a", "test2a", "test3a", "test1b", "test2b", "test3b", "stopgo"};
}

Scenario demo_scenario(std::string_view name) {
  if (name == "test1a") return test1a();
  if (name == "test2a") return test2a();
  if (name == "test3a") return test3a();
  if (name == "test1b") return test1b();
  if (name == "test2b") return test2b();
  if (name == "test3b") return test3b();
  if (name == "stopgo") return stopgo();
  throw std::invalid_argument("unknown demo '" + std::string(name) + "'");
}

bool DemoSummary::all_passed() const {
  return std::ranges::all_of(checks, &DemoCheck::passed);
}

std::string DemoSummary::text() const {
  std::ostringstream os;
  os << "demo " << name << "\n";
  for (const auto& n : notes) os << "  " << n << "\n";
  for (const auto& c : checks) os << "  [" << (c.passed ? "PASS" : "FAIL") << "] " << c.name << ": " << c.detail << "\n";
  os << (all_passed() ? "all checks passed\n" : "some checks failed\n");
  return os.str();
}

DemoSummary summarize_demo(std::string_view name, const RunResult& r) {
  if (name == "test1a") return sum_test1a(r);
  if (name == "test2a") return sum_test2a(r);
  if (name == "test3a") return sum_test3a(r);
  if (name == "test1b") return sum_test1b(r);
  if (name == "test2b") return sum_test2b(r);
  if (name == "test3b") return sum_test3b(r);
  if (name == "stopgo") return sum_stopgo(r);
  throw std::invalid_argument("unknown demo '" + std::string(name) + "'");
}

QueueExtent stopgo_queue(const RunResult& r, double x_slow) {
  QueueExtent q;
  double rear = x_slow;
  for (const auto& t : r.trajectories) {
    // Stops near the entrance are insertion waits, not part of the wave.
    if (t.v_kmh >= 1.0 || t.x_km > x_slow + 1.0 || t.x_km < kEntranceMarginKm) continue;
    if (t.t_s < kStopgoSlowdownS) continue;
    if (!q.stopped) q.first_stop_s = t.t_s;
    q.stopped = true;
    q.first_stop_s = std::min(q.first_stop_s, t.t_s);
    q.last_stop_s = std::max(q.last_stop_s, t.t_s);
    rear = std::min(rear, t.x_km);
  }
  q.upstream_km = x_slow - rear;
  q.duration_min = (q.last_stop_s - q.first_stop_s) / 60.0;
  return q;
}

std::string stopgo_sweep() {
  std::ostringstream os;
  os << "tau_acc_s,delta_close_km,queue_extent_km,queue_duration_min\n";
  const auto base_s = stopgo();
  const auto& lead = base_s.roads.front().trucks.front();
  const double x_slow = lead.x_km + lead.v_kmh * kStopgoSlowdownS / 3600.0;
  for (double tau_acc : {25.2, 50.4, 100.8})
    for (double dc : {0.020, 0.025, 0.030}) {
      auto s = base_s;
      s.micro.tau_acc_s = tau_acc;
      s.micro.delta_close_km = dc;
      const auto res = Simulation(s).run();
      const auto q = stopgo_queue(res, x_slow);
      char buf[128];
      std::snprintf(buf, sizeof buf, "%.1f,%.3f,%.3f,%.3f\n", tau_acc, dc, q.upstream_km, q.duration_min);
      os << buf;
    }
  return os.str();
}

const RoadRecord& road_record(const RunResult& r, std::string_view id) { return r.roads.at(road_index(r, id)); }

const FieldMatrix& field(const RunResult& r, std::string_view road, std::string_view key) {
  const auto& rec = road_record(r, road);
  const auto it = rec.fields.find(std::string(key));
  if (it == rec.fields.end()) throw std::out_of_range("no field '" + std::string(key) + "' on road " + rec.id);
  return it->second;
}

}  // namespace twoflow

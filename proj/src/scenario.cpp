#include "twoflow/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "twoflow/network.hpp"

namespace twoflow {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& errors) {
  std::ostringstream os;
  os << "invalid scenario";
  for (const auto& e : errors) os << "\n  " << e;
  return os.str();
}

// Collects every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  void allow(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
    for (const auto& [k, _] : obj.items()) {
      bool ok = false;
      for (auto a : keys) ok = ok || a == k;
      if (!ok) errors.push_back(where + ": unknown key '" + k + "'");
    }
  }

  bool object(const json& j, const std::string& where) {
    if (j.is_object()) return true;
    errors.push_back(where + ": expected an object");
    return false;
  }

  template <class T>
  bool get(const json& obj, const char* key, T& out, const std::string& where, bool required = false) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) errors.push_back(where + ": missing required key '" + key + "'");
      return false;
    }
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!it->is_number()) throw std::invalid_argument("not a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("not an integer");
      }
      out = it->template get<T>();
      return true;
    } catch (const std::exception&) {
      errors.push_back(where + "." + key + ": wrong type");
      return false;
    }
  }
};

BoundaryCondition::Kind bc_kind(const std::string& s, bool& ok) {
  ok = true;
  if (s == "dirichlet") return BoundaryCondition::Kind::Dirichlet;
  if (s == "inflow") return BoundaryCondition::Kind::Inflow;
  if (s == "free") return BoundaryCondition::Kind::FreeOutflow;
  if (s == "closed") return BoundaryCondition::Kind::Closed;
  ok = false;
  return BoundaryCondition::Kind::FreeOutflow;
}

FdConfig fd_from_object(const json& j, Reader& rd, const std::string& where) {
  rd.allow(j,
           {"light_vehicle_length_km", "light_lanes_usable", "light_v_max_kmh",
            "heavy_vehicle_length_km", "heavy_lanes_usable", "heavy_v_max_kmh", "beta", "rho_L_max",
            "rho_H_max", "f_L_peak_free", "f_L_peak_jammed", "f_H_peak_free", "v_L_star_jammed",
            "transition_level"},
           where);
  const auto base = FdConfig::motorway();
  ClassParams light = base.light, heavy = base.heavy;
  double fLf = base.f_L_peak_free, fLj = base.f_L_peak_jammed, fHf = base.f_H_peak_free,
         vLj = base.v_L_star_jammed;
  rd.get(j, "light_vehicle_length_km", light.vehicle_length_km, where);
  rd.get(j, "light_lanes_usable", light.lanes_usable, where);
  rd.get(j, "light_v_max_kmh", light.v_max_kmh, where);
  rd.get(j, "heavy_vehicle_length_km", heavy.vehicle_length_km, where);
  rd.get(j, "heavy_lanes_usable", heavy.lanes_usable, where);
  rd.get(j, "heavy_v_max_kmh", heavy.v_max_kmh, where);
  rd.get(j, "f_L_peak_free", fLf, where);
  rd.get(j, "f_L_peak_jammed", fLj, where);
  rd.get(j, "f_H_peak_free", fHf, where);
  rd.get(j, "v_L_star_jammed", vLj, where);
  FdConfig cfg;
  try {
    cfg = FdConfig::make(light, heavy, fLf, fLj, fHf, vLj);
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) rd.errors.push_back(where + ": " + p);
    return base;
  }
  // Derived fields are optional; if present they must agree.
  auto check = [&](const char* key, double expect) {
    double v = 0;
    if (rd.get(j, key, v, where) && std::abs(v - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
      rd.errors.push_back(where + "." + key + ": inconsistent with the base parameters");
  };
  check("beta", cfg.beta);
  check("rho_L_max", cfg.rho_L_max);
  check("rho_H_max", cfg.rho_H_max);
  check("transition_level", cfg.transition_level);
  return cfg;
}

json fd_object(const FdConfig& c) {
  return json{{"light_vehicle_length_km", c.light.vehicle_length_km},
              {"light_lanes_usable", c.light.lanes_usable},
              {"light_v_max_kmh", c.light.v_max_kmh},
              {"heavy_vehicle_length_km", c.heavy.vehicle_length_km},
              {"heavy_lanes_usable", c.heavy.lanes_usable},
              {"heavy_v_max_kmh", c.heavy.v_max_kmh},
              {"beta", c.beta},
              {"rho_L_max", c.rho_L_max},
              {"rho_H_max", c.rho_H_max},
              {"f_L_peak_free", c.f_L_peak_free},
              {"f_L_peak_jammed", c.f_L_peak_jammed},
              {"f_H_peak_free", c.f_H_peak_free},
              {"v_L_star_jammed", c.v_L_star_jammed},
              {"transition_level", c.transition_level}};
}

std::vector<Piece> read_pieces(const json& arr, Reader& rd, const std::string& where) {
  std::vector<Piece> out;
  if (!arr.is_array()) {
    rd.errors.push_back(where + ": expected an array");
    return out;
  }
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const auto w = where + "[" + std::to_string(k) + "]";
    if (!rd.object(arr[k], w)) continue;
    rd.allow(arr[k], {"from_km", "to_km", "value", "amplitude", "wavelength_km"}, w);
    Piece p;
    rd.get(arr[k], "from_km", p.from_km, w, true);
    rd.get(arr[k], "to_km", p.to_km, w, true);
    rd.get(arr[k], "value", p.value, w, true);
    rd.get(arr[k], "amplitude", p.amplitude, w);
    rd.get(arr[k], "wavelength_km", p.wavelength_km, w);
    out.push_back(p);
  }
  return out;
}

json pieces_json(const std::vector<Piece>& ps) {
  json a = json::array();
  for (const auto& p : ps) {
    json o{{"from_km", p.from_km}, {"to_km", p.to_km}, {"value", p.value}};
    if (p.amplitude != 0.0) {
      o["amplitude"] = p.amplitude;
      o["wavelength_km"] = p.wavelength_km;
    } else if (p.wavelength_km != 1.0) {
      o["wavelength_km"] = p.wavelength_km;
    }
    a.push_back(o);
  }
  return a;
}

BcSpec read_bc_entry(const json& j, Reader& rd, const std::string& where) {
  BcSpec b;
  if (j.is_string()) {
    bool ok;
    b.kind = bc_kind(j.get<std::string>(), ok);
    if (!ok) rd.errors.push_back(where + ": unknown boundary type '" + j.get<std::string>() + "'");
    return b;
  }
  if (!rd.object(j, where)) return b;
  rd.allow(j, {"from_s", "type", "rho_L", "rho_H", "flux_L", "flux_H"}, where);
  std::string type;
  if (rd.get(j, "type", type, where, true)) {
    bool ok;
    b.kind = bc_kind(type, ok);
    if (!ok) rd.errors.push_back(where + ": unknown boundary type '" + type + "'");
  }
  rd.get(j, "from_s", b.from_s, where);
  rd.get(j, "rho_L", b.rho_L, where);
  rd.get(j, "rho_H", b.rho_H, where);
  rd.get(j, "flux_L", b.flux_L, where);
  rd.get(j, "flux_H", b.flux_H, where);
  return b;
}

std::vector<BcSpec> read_bc(const json& j, Reader& rd, const std::string& where) {
  std::vector<BcSpec> out;
  if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k)
      out.push_back(read_bc_entry(j[k], rd, where + "[" + std::to_string(k) + "]"));
    if (out.empty()) rd.errors.push_back(where + ": empty boundary schedule");
  } else {
    out.push_back(read_bc_entry(j, rd, where));
  }
  return out;
}

json bc_entry_json(const BcSpec& b) {
  json o{{"type", to_string(b.kind)}};
  if (b.from_s != 0.0) o["from_s"] = b.from_s;
  if (b.kind == BoundaryCondition::Kind::Dirichlet) {
    o["rho_L"] = b.rho_L;
    o["rho_H"] = b.rho_H;
  } else if (b.kind == BoundaryCondition::Kind::Inflow) {
    o["flux_L"] = b.flux_L;
    o["flux_H"] = b.flux_H;
  }
  return o;
}

json bc_json(const std::vector<BcSpec>& bs) {
  if (bs.size() == 1 && bs[0].from_s == 0.0) return bc_entry_json(bs[0]);
  json a = json::array();
  for (const auto& b : bs) a.push_back(bc_entry_json(b));
  return a;
}

RoadSpec read_road(const json& j, Reader& rd, const std::string& where) {
  RoadSpec r;
  if (!rd.object(j, where)) return r;
  rd.allow(j,
           {"id", "length_km", "lanes", "truck_lanes", "light", "heavy", "trucks", "truck_fill",
            "left_bc", "right_bc", "truck_inflow"},
           where);
  rd.get(j, "id", r.id, where, true);
  rd.get(j, "length_km", r.length_km, where, true);
  rd.get(j, "lanes", r.lanes, where);
  rd.get(j, "truck_lanes", r.truck_lanes, where);
  if (j.contains("light")) r.light = read_pieces(j["light"], rd, where + ".light");
  if (j.contains("heavy")) r.heavy = read_pieces(j["heavy"], rd, where + ".heavy");
  if (j.contains("left_bc")) r.left_bc = read_bc(j["left_bc"], rd, where + ".left_bc");
  if (j.contains("right_bc")) r.right_bc = read_bc(j["right_bc"], rd, where + ".right_bc");
  if (j.contains("trucks")) {
    const auto& a = j["trucks"];
    if (!a.is_array()) rd.errors.push_back(where + ".trucks: expected an array");
    for (std::size_t k = 0; a.is_array() && k < a.size(); ++k) {
      const auto w = where + ".trucks[" + std::to_string(k) + "]";
      if (!rd.object(a[k], w)) continue;
      rd.allow(a[k], {"x_km", "v_kmh", "path", "script"}, w);
      TruckSpec t;
      rd.get(a[k], "x_km", t.x_km, w, true);
      rd.get(a[k], "v_kmh", t.v_kmh, w);
      rd.get(a[k], "path", t.path, w);
      if (a[k].contains("script")) {
        const auto& s = a[k]["script"];
        if (!s.is_array()) rd.errors.push_back(w + ".script: expected an array");
        for (std::size_t m = 0; s.is_array() && m < s.size(); ++m) {
          const auto ws = w + ".script[" + std::to_string(m) + "]";
          if (!rd.object(s[m], ws)) continue;
          rd.allow(s[m], {"t_s", "v_kmh"}, ws);
          ScriptKnot knot;
          rd.get(s[m], "t_s", knot.t_s, ws, true);
          rd.get(s[m], "v_kmh", knot.v_kmh, ws, true);
          t.script.push_back(knot);
        }
      }
      r.trucks.push_back(std::move(t));
    }
  }
  if (j.contains("truck_fill")) {
    const auto w = where + ".truck_fill";
    const auto& f = j["truck_fill"];
    if (rd.object(f, w)) {
      rd.allow(f, {"from_km", "to_km", "spacing_km", "v_kmh"}, w);
      TruckFill tf;
      rd.get(f, "from_km", tf.from_km, w, true);
      rd.get(f, "to_km", tf.to_km, w, true);
      rd.get(f, "spacing_km", tf.spacing_km, w, true);
      rd.get(f, "v_kmh", tf.v_kmh, w);
      r.truck_fill = tf;
    }
  }
  if (j.contains("truck_inflow")) {
    const auto w = where + ".truck_inflow";
    const auto& f = j["truck_inflow"];
    if (rd.object(f, w)) {
      rd.allow(f, {"headway_s", "v_kmh", "start_s", "until_s", "path"}, w);
      TruckInflow ti;
      rd.get(f, "headway_s", ti.headway_s, w, true);
      rd.get(f, "v_kmh", ti.v_kmh, w);
      rd.get(f, "start_s", ti.start_s, w);
      rd.get(f, "until_s", ti.until_s, w);
      rd.get(f, "path", ti.path, w);
      r.truck_inflow = ti;
    }
  }
  return r;
}

json road_json(const RoadSpec& r) {
  json o{{"id", r.id}, {"length_km", r.length_km}, {"lanes", r.lanes}, {"truck_lanes", r.truck_lanes}};
  if (!r.light.empty()) o["light"] = pieces_json(r.light);
  if (!r.heavy.empty()) o["heavy"] = pieces_json(r.heavy);
  if (!r.trucks.empty()) {
    json a = json::array();
    for (const auto& t : r.trucks) {
      json to{{"x_km", t.x_km}, {"v_kmh", t.v_kmh}};
      if (t.path != 0) to["path"] = t.path;
      if (!t.script.empty()) {
        json s = json::array();
        for (const auto& k : t.script) s.push_back({{"t_s", k.t_s}, {"v_kmh", k.v_kmh}});
        to["script"] = s;
      }
      a.push_back(to);
    }
    o["trucks"] = a;
  }
  if (r.truck_fill) {
    const auto& f = *r.truck_fill;
    o["truck_fill"] = {{"from_km", f.from_km}, {"to_km", f.to_km}, {"spacing_km", f.spacing_km},
                       {"v_kmh", f.v_kmh}};
  }
  o["left_bc"] = bc_json(r.left_bc);
  o["right_bc"] = bc_json(r.right_bc);
  if (r.truck_inflow) {
    const auto& f = *r.truck_inflow;
    json ti{{"headway_s", f.headway_s}, {"v_kmh", f.v_kmh}, {"start_s", f.start_s}};
    if (std::isfinite(f.until_s)) ti["until_s"] = f.until_s;
    if (f.path != 0) ti["path"] = f.path;
    o["truck_inflow"] = ti;
  }
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError({"cannot open '" + path + "'"});
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

FdConfig road_fd(const FdConfig& base, const RoadSpec& r) {
  if (r.lanes == base.light.lanes_usable && r.truck_lanes == base.heavy.lanes_usable) return base;
  return network::lane_generalization(base, r.lanes, r.truck_lanes);
}

double Piece::at(double x_km) const {
  if (amplitude == 0.0) return value;
  return value + amplitude * std::sin(2.0 * std::numbers::pi * (x_km - from_km) / wavelength_km);
}

BoundaryCondition BcSpec::to_bc() const {
  switch (kind) {
    case BoundaryCondition::Kind::Dirichlet: return BoundaryCondition::dirichlet({rho_L, rho_H});
    case BoundaryCondition::Kind::Inflow: return BoundaryCondition::inflow(flux_L, flux_H);
    case BoundaryCondition::Kind::Closed: return BoundaryCondition::closed();
    case BoundaryCondition::Kind::Prescribed: return BoundaryCondition::prescribed({flux_L, flux_H});
    case BoundaryCondition::Kind::FreeOutflow: break;
  }
  return BoundaryCondition::free_outflow();
}

MicroConfig MicroSpec::to_config() const {
  MicroConfig m;
  m.delta_close_km = delta_close_km;
  m.delta_far_km = delta_far_km;
  m.v_max_kmh = v_max_kmh;
  m.tau_acc_h = tau_acc_s / 3600.0;
  m.tau_dec_h = tau_dec_s / 3600.0;
  m.euler_dt_h = euler_dt_s / 3600.0;
  m.coupling_window_km = coupling_window_km;
  m.coupling_slope_km = coupling_slope_km;
  return m;
}

ScenarioError::ScenarioError(std::vector<std::string> errors)
    : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

std::vector<std::string> check_scenario(const Scenario& s) {
  std::vector<std::string> e;
  if (!(s.dx_km > 0)) e.push_back("dx_km must be > 0");
  if (!(s.dt_s >= 0)) e.push_back("dt_s must be >= 0");
  if (!(s.horizon_s >= 0)) e.push_back("horizon_s must be >= 0");
  if (!(s.output.interval_s > 0)) e.push_back("output.interval_s must be > 0");
  if (s.output.trajectory_thinning < 1) e.push_back("output.trajectory_thinning must be >= 1");
  for (const auto& q : s.output.quantities)
    if (q != "density" && q != "velocity" && q != "flux")
      e.push_back("output.quantities: unknown quantity '" + q + "'");
  try {
    s.fd.validate();
  } catch (const ConfigError& c) {
    for (const auto& p : c.problems()) e.push_back("fd: " + p);
  }
  if (s.model == ModelKind::Multiscale) {
    try {
      s.micro.to_config().validate();
    } catch (const ConfigError& c) {
      for (const auto& p : c.problems()) e.push_back("micro: " + p);
    }
    if (s.dt_s > 0 && s.micro.euler_dt_s > 0) {
      const double r = s.dt_s / s.micro.euler_dt_s;
      if (std::abs(r - std::round(r)) > 1e-9 * r || std::round(r) < 1)
        e.push_back("dt_s must be an integer multiple of micro.euler_dt_s");
    }
  }

  if (s.roads.empty()) e.push_back("roads: at least one road is required");
  std::set<std::string> ids;
  for (std::size_t k = 0; k < s.roads.size(); ++k) {
    const auto& r = s.roads[k];
    const std::string w = "roads[" + std::to_string(k) + "] (" + r.id + ")";
    if (r.id.empty()) e.push_back(w + ": empty id");
    if (!ids.insert(r.id).second) e.push_back(w + ": duplicate id");
    if (!(r.length_km > 0)) {
      e.push_back(w + ": length_km must be > 0");
      continue;
    }
    if (s.dx_km > 0 && r.length_km / s.dx_km > static_cast<double>(kMaxCells))
      e.push_back(w + ": dx_km too small, more than " + std::to_string(kMaxCells) + " cells");
    if (r.truck_lanes < 1 || r.truck_lanes >= r.lanes) {
      e.push_back(w + ": need 1 <= truck_lanes < lanes");
      continue;
    }
    FdConfig fd;
    try {
      fd = road_fd(s.fd, r);
    } catch (const std::exception& x) {
      e.push_back(w + ": " + x.what());
      continue;
    }
    for (const auto* ps : {&r.light, &r.heavy})
      for (const auto& p : *ps) {
        if (!(p.from_km >= 0 && p.from_km < p.to_km && p.to_km <= r.length_km + 1e-12))
          e.push_back(w + ": initial piece must satisfy 0 <= from_km < to_km <= length_km");
        if (!(p.wavelength_km > 0)) e.push_back(w + ": wavelength_km must be > 0");
      }
    if (s.model == ModelKind::Multiscale && !r.heavy.empty())
      e.push_back(w + ": heavy densities are macro-only; give trucks explicitly");
    if (s.model == ModelKind::Macro && (!r.trucks.empty() || r.truck_fill || r.truck_inflow))
      e.push_back(w + ": microscopic trucks require the multiscale model");
    if (s.dx_km > 0 && r.length_km / s.dx_km <= static_cast<double>(kMaxCells)) {
      const auto n = static_cast<std::size_t>(std::max(1.0, std::round(r.length_km / s.dx_km)));
      bool reported = false;
      for (std::size_t i = 0; i < n && !reported; ++i) {
        const double x = (static_cast<double>(i) + 0.5) * s.dx_km;
        TwoClassState st;
        for (const auto& p : r.light)
          if (x >= p.from_km && x < p.to_km) st.rho_L = p.at(x);
        for (const auto& p : r.heavy)
          if (x >= p.from_km && x < p.to_km) st.rho_H = p.at(x);
        if (!fd::in_domain(st, fd)) {
          std::ostringstream os;
          os << w << ": initial state (" << st.rho_L << ", " << st.rho_H << ") at x=" << x
             << " km is not admissible";
          e.push_back(os.str());
          reported = true;
        }
      }
    }
    for (const auto* side : {&r.left_bc, &r.right_bc}) {
      const bool left = side == &r.left_bc;
      const std::string ws = w + (left ? ".left_bc" : ".right_bc");
      if (side->empty()) e.push_back(ws + ": empty");
      for (std::size_t m = 0; m < side->size(); ++m) {
        const auto& b = (*side)[m];
        if (m == 0 && b.from_s != 0.0) e.push_back(ws + ": first entry must start at 0");
        if (m > 0 && !(b.from_s > (*side)[m - 1].from_s))
          e.push_back(ws + ": from_s must increase");
        if (b.kind == BoundaryCondition::Kind::Dirichlet && !fd::in_domain({b.rho_L, b.rho_H}, fd))
          e.push_back(ws + ": Dirichlet state is not admissible");
        if (b.kind == BoundaryCondition::Kind::Inflow) {
          if (!left) e.push_back(ws + ": inflow is only allowed upstream");
          if (!(b.flux_L >= 0 && b.flux_H >= 0)) e.push_back(ws + ": inflow fluxes must be >= 0");
        }
      }
    }
    std::vector<double> xs;
    for (const auto& t : r.trucks) {
      if (!(t.x_km >= 0 && t.x_km < r.length_km)) e.push_back(w + ": truck outside the road");
      if (!(t.v_kmh >= 0)) e.push_back(w + ": truck speed must be >= 0");
      for (std::size_t m = 1; m < t.script.size(); ++m)
        if (!(t.script[m].t_s > t.script[m - 1].t_s)) e.push_back(w + ": script times must increase");
      xs.push_back(t.x_km);
    }
    if (r.truck_fill) {
      const auto& f = *r.truck_fill;
      if (!(f.spacing_km > 0)) e.push_back(w + ": truck_fill.spacing_km must be > 0");
      else if (!(f.from_km >= 0 && f.from_km < f.to_km && f.to_km <= r.length_km))
        e.push_back(w + ": truck_fill range must lie on the road");
      else
        for (double x = f.from_km; x < f.to_km - 1e-12; x += f.spacing_km) xs.push_back(x);
    }
    std::ranges::sort(xs);
    for (std::size_t m = 1; m < xs.size(); ++m)
      if (!(xs[m] > xs[m - 1])) {
        e.push_back(w + ": two trucks share a position");
        break;
      }
    if (r.truck_inflow) {
      const auto& f = *r.truck_inflow;
      if (!(f.headway_s > 0)) e.push_back(w + ": truck_inflow.headway_s must be > 0");
      if (!(f.v_kmh >= 0)) e.push_back(w + ": truck_inflow.v_kmh must be >= 0");
    }
  }

  auto find = [&](const std::string& id) -> bool { return ids.contains(id); };
  for (std::size_t k = 0; k < s.junctions.size(); ++k) {
    const auto& j = s.junctions[k];
    const std::string w = "junctions[" + std::to_string(k) + "]";
    if (j.kind != "merge" && j.kind != "diverge") e.push_back(w + ": kind must be merge or diverge");
    const bool merge = j.kind == "merge";
    if (j.incoming.size() != (merge ? 2u : 1u) || j.outgoing.size() != (merge ? 1u : 2u))
      e.push_back(w + ": wrong number of incoming/outgoing roads for a " + j.kind);
    for (const auto* v : {&j.incoming, &j.outgoing})
      for (const auto& id : *v)
        if (!find(id)) e.push_back(w + ": unknown road '" + id + "'");
    if (!(j.priority >= 0 && j.priority <= 1)) e.push_back(w + ": priority must lie in [0, 1]");
    for (const auto* th : {&j.theta_L, &j.theta_H})
      if ((*th)[0] < 0 || (*th)[1] < 0 || std::abs((*th)[0] + (*th)[1] - 1.0) > 1e-9)
        e.push_back(w + ": split fractions must be non-negative and sum to 1");
  }
  for (std::size_t k = 0; k < s.paths.size(); ++k)
    for (const auto& id : s.paths[k])
      if (!find(id)) e.push_back("paths[" + std::to_string(k) + "]: unknown road '" + id + "'");
  return e;
}

Scenario parse_scenario(std::string_view text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& x) {
    throw ScenarioError({std::string("malformed JSON: ") + x.what()});
  }
  Reader rd;
  Scenario s;
  if (!rd.object(j, "scenario")) throw ScenarioError(rd.errors);
  rd.allow(j,
           {"name", "model", "fd", "fd_file", "micro", "dx_km", "dt_s", "horizon_s", "output", "roads",
            "junctions", "paths"},
           "scenario");
  rd.get(j, "name", s.name, "scenario");
  std::string model = "macro";
  rd.get(j, "model", model, "scenario");
  if (model == "macro") s.model = ModelKind::Macro;
  else if (model == "multiscale") s.model = ModelKind::Multiscale;
  else rd.errors.push_back("scenario.model: must be 'macro' or 'multiscale'");
  s.dt_s = s.model == ModelKind::Multiscale ? 2.0 : 2.6;

  if (j.contains("fd") && j.contains("fd_file"))
    rd.errors.push_back("scenario: give either fd or fd_file, not both");
  if (j.contains("fd") && rd.object(j["fd"], "fd")) s.fd = fd_from_object(j["fd"], rd, "fd");
  if (rd.get(j, "fd_file", s.fd_file, "scenario")) {
    std::filesystem::path p(s.fd_file);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    try {
      s.fd = fd_from_json(read_file(p.string()));
    } catch (const std::exception& x) {
      rd.errors.push_back(std::string("fd_file: ") + x.what());
    }
  }
  if (j.contains("micro") && rd.object(j["micro"], "micro")) {
    const auto& m = j["micro"];
    rd.allow(m,
             {"delta_close_km", "delta_far_km", "v_max_kmh", "tau_acc_s", "tau_dec_s", "euler_dt_s",
              "coupling_window_km", "coupling_slope_km"},
             "micro");
    rd.get(m, "delta_close_km", s.micro.delta_close_km, "micro");
    rd.get(m, "delta_far_km", s.micro.delta_far_km, "micro");
    rd.get(m, "v_max_kmh", s.micro.v_max_kmh, "micro");
    rd.get(m, "tau_acc_s", s.micro.tau_acc_s, "micro");
    rd.get(m, "tau_dec_s", s.micro.tau_dec_s, "micro");
    rd.get(m, "euler_dt_s", s.micro.euler_dt_s, "micro");
    rd.get(m, "coupling_window_km", s.micro.coupling_window_km, "micro");
    rd.get(m, "coupling_slope_km", s.micro.coupling_slope_km, "micro");
  }
  rd.get(j, "dx_km", s.dx_km, "scenario");
  rd.get(j, "dt_s", s.dt_s, "scenario");
  rd.get(j, "horizon_s", s.horizon_s, "scenario", true);
  if (j.contains("output") && rd.object(j["output"], "output")) {
    const auto& o = j["output"];
    rd.allow(o, {"interval_s", "quantities", "trajectory_thinning"}, "output");
    rd.get(o, "interval_s", s.output.interval_s, "output");
    rd.get(o, "quantities", s.output.quantities, "output");
    rd.get(o, "trajectory_thinning", s.output.trajectory_thinning, "output");
  }
  if (!j.contains("roads")) rd.errors.push_back("scenario: missing required key 'roads'");
  else if (!j["roads"].is_array()) rd.errors.push_back("roads: expected an array");
  else
    for (std::size_t k = 0; k < j["roads"].size(); ++k)
      s.roads.push_back(read_road(j["roads"][k], rd, "roads[" + std::to_string(k) + "]"));
  if (j.contains("junctions")) {
    const auto& a = j["junctions"];
    if (!a.is_array()) rd.errors.push_back("junctions: expected an array");
    for (std::size_t k = 0; a.is_array() && k < a.size(); ++k) {
      const auto w = "junctions[" + std::to_string(k) + "]";
      if (!rd.object(a[k], w)) continue;
      rd.allow(a[k], {"kind", "incoming", "outgoing", "priority", "theta", "theta_L", "theta_H"}, w);
      JunctionSpec js;
      rd.get(a[k], "kind", js.kind, w, true);
      rd.get(a[k], "incoming", js.incoming, w, true);
      rd.get(a[k], "outgoing", js.outgoing, w, true);
      rd.get(a[k], "priority", js.priority, w);
      if (rd.get(a[k], "theta", js.theta_L, w)) js.theta_H = js.theta_L;
      rd.get(a[k], "theta_L", js.theta_L, w);
      rd.get(a[k], "theta_H", js.theta_H, w);
      s.junctions.push_back(std::move(js));
    }
  }
  rd.get(j, "paths", s.paths, "scenario");

  auto errors = rd.errors;
  if (errors.empty()) errors = check_scenario(s);
  if (!errors.empty()) throw ScenarioError(errors);
  return s;
}

Scenario load_scenario(const std::string& path) {
  const auto text = read_file(path);
  return parse_scenario(text, std::filesystem::path(path).parent_path().string());
}

std::string print_scenario(const Scenario& s) {
  json j{{"name", s.name},
         {"model", s.model == ModelKind::Macro ? "macro" : "multiscale"},
         {"dx_km", s.dx_km},
         {"dt_s", s.dt_s},
         {"horizon_s", s.horizon_s}};
  if (s.fd_file.empty()) j["fd"] = fd_object(s.fd);
  else j["fd_file"] = s.fd_file;
  if (s.model == ModelKind::Multiscale) {
    const auto& m = s.micro;
    j["micro"] = {{"delta_close_km", m.delta_close_km}, {"delta_far_km", m.delta_far_km},
                  {"v_max_kmh", m.v_max_kmh},           {"tau_acc_s", m.tau_acc_s},
                  {"tau_dec_s", m.tau_dec_s},           {"euler_dt_s", m.euler_dt_s},
                  {"coupling_window_km", m.coupling_window_km},
                  {"coupling_slope_km", m.coupling_slope_km}};
  }
  j["output"] = {{"interval_s", s.output.interval_s},
                 {"quantities", s.output.quantities},
                 {"trajectory_thinning", s.output.trajectory_thinning}};
  json roads = json::array();
  for (const auto& r : s.roads) roads.push_back(road_json(r));
  j["roads"] = roads;
  if (!s.junctions.empty()) {
    json a = json::array();
    for (const auto& js : s.junctions)
      a.push_back({{"kind", js.kind},
                   {"incoming", js.incoming},
                   {"outgoing", js.outgoing},
                   {"priority", js.priority},
                   {"theta_L", js.theta_L},
                   {"theta_H", js.theta_H}});
    j["junctions"] = a;
  }
  if (!s.paths.empty()) j["paths"] = s.paths;
  return j.dump(2) + "\n";
}

std::string fd_to_json(const FdConfig& cfg) { return fd_object(cfg).dump(2) + "\n"; }

FdConfig fd_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& x) {
    throw ScenarioError({std::string("malformed JSON: ") + x.what()});
  }
  Reader rd;
  if (!rd.object(j, "fd")) throw ScenarioError(rd.errors);
  auto cfg = fd_from_object(j, rd, "fd");
  if (!rd.errors.empty()) throw ScenarioError(rd.errors);
  return cfg;
}

FdConfig read_fd_file(const std::string& path) { return fd_from_json(read_file(path)); }

void write_fd_file(const std::string& path, const FdConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << fd_to_json(cfg);
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::uint64_t scenario_hash(const Scenario& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : print_scenario(s)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace twoflow

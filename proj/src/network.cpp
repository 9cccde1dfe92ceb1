#include "twoflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

namespace twoflow {

const char* to_string(Junction::Kind kind) {
  return kind == Junction::Kind::Merge ? "merge" : "diverge";
}

void Network::validate() const {
  std::vector<std::string> p;
  if (roads.empty()) p.push_back("network has no roads");
  const auto nr = roads.size();
  for (std::size_t r = 0; r < nr; ++r) {
    if (roads[r].truck_lanes < 1 || roads[r].truck_lanes >= roads[r].lanes)
      p.push_back("road " + roads[r].id + ": need 1 <= truck_lanes < lanes");
  }
  std::vector<int> in_use(nr, 0), out_use(nr, 0);
  for (std::size_t k = 0; k < junctions.size(); ++k) {
    const auto& j = junctions[k];
    const std::string tag = "junction " + std::to_string(k) + ": ";
    const bool merge = j.kind == Junction::Kind::Merge;
    if (j.incoming.size() != (merge ? 2u : 1u) || j.outgoing.size() != (merge ? 1u : 2u))
      p.push_back(tag + (merge ? "merge needs 2 incoming and 1 outgoing road"
                               : "diverge needs 1 incoming and 2 outgoing roads"));
    for (auto r : j.incoming) {
      if (r >= nr) p.push_back(tag + "incoming road index out of range");
      else if (++out_use[r] > 1) p.push_back(tag + "road " + roads[r].id + " ends in two junctions");
    }
    for (auto r : j.outgoing) {
      if (r >= nr) p.push_back(tag + "outgoing road index out of range");
      else if (++in_use[r] > 1) p.push_back(tag + "road " + roads[r].id + " starts in two junctions");
    }
    if (!(j.priority >= 0 && j.priority <= 1)) p.push_back(tag + "priority must lie in [0, 1]");
    for (const auto* th : {&j.theta_L, &j.theta_H}) {
      if ((*th)[0] < 0 || (*th)[1] < 0 || std::abs((*th)[0] + (*th)[1] - 1.0) > 1e-9)
        p.push_back(tag + "split fractions must be non-negative and sum to 1");
    }
  }
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const auto& path = paths[k];
    if (path.empty()) p.push_back("path " + std::to_string(k) + " is empty");
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (path[i] >= nr) {
        p.push_back("path " + std::to_string(k) + " references a missing road");
        break;
      }
      if (i + 1 < path.size() && path[i + 1] < nr) {
        const auto jd = junction_downstream_of(path[i]);
        const bool linked =
            jd && std::ranges::find(junctions[*jd].outgoing, path[i + 1]) != junctions[*jd].outgoing.end();
        if (!linked)
          p.push_back("path " + std::to_string(k) + ": roads " + roads[path[i]].id + " and " +
                      roads[path[i + 1]].id + " are not joined by a junction");
      }
    }
  }
  if (!p.empty()) throw ConfigError(p);
}

std::optional<std::size_t> Network::junction_downstream_of(std::size_t road) const {
  for (std::size_t k = 0; k < junctions.size(); ++k)
    if (std::ranges::find(junctions[k].incoming, road) != junctions[k].incoming.end()) return k;
  return std::nullopt;
}

std::optional<std::size_t> Network::junction_upstream_of(std::size_t road) const {
  for (std::size_t k = 0; k < junctions.size(); ++k)
    if (std::ranges::find(junctions[k].outgoing, road) != junctions[k].outgoing.end()) return k;
  return std::nullopt;
}

std::optional<std::size_t> Network::road_index(const std::string& id) const {
  for (std::size_t r = 0; r < roads.size(); ++r)
    if (roads[r].id == id) return r;
  return std::nullopt;
}

namespace network {

std::array<double, 2> merge_allocation(double s1, double s2, double r, double p) {
  if (s1 + s2 <= r) return {s1, s2};
  const double q1 = std::min(s1, std::max(p * r, r - s2));
  const double q2 = std::min(s2, std::max((1.0 - p) * r, r - s1));
  return {q1, q2};
}

double diverge_total(double s, double r1, double r2, double theta1, double theta2) {
  double q = s;
  if (theta1 > 0) q = std::min(q, r1 / theta1);
  if (theta2 > 0) q = std::min(q, r2 / theta2);
  return std::max(0.0, q);
}

JunctionFlux junction_fluxes(const Junction& j, std::span<const Endpoint> up,
                             std::span<const Endpoint> down) {
  auto sr = [](const Endpoint& e) {
    return std::pair{ctm::sending_receiving_L(e.state, *e.cfg), ctm::sending_receiving_H(e.state, *e.cfg)};
  };
  JunctionFlux out;
  if (j.kind == Junction::Kind::Merge) {
    const auto [a_L, a_H] = sr(up[0]);
    const auto [b_L, b_H] = sr(up[1]);
    const auto [o_L, o_H] = sr(down[0]);
    const auto qL = merge_allocation(a_L.send, b_L.send, o_L.receive, j.priority);
    const auto qH = merge_allocation(a_H.send, b_H.send, o_H.receive, j.priority);
    out.incoming = {{qL[0], qH[0]}, {qL[1], qH[1]}};
    out.outgoing = {{qL[0] + qL[1], qH[0] + qH[1]}};
  } else {
    const auto [i_L, i_H] = sr(up[0]);
    const auto [a_L, a_H] = sr(down[0]);
    const auto [b_L, b_H] = sr(down[1]);
    const double qL = diverge_total(i_L.send, a_L.receive, b_L.receive, j.theta_L[0], j.theta_L[1]);
    const double qH = diverge_total(i_H.send, a_H.receive, b_H.receive, j.theta_H[0], j.theta_H[1]);
    const ClassFlux o0{j.theta_L[0] * qL, j.theta_H[0] * qH};
    const ClassFlux o1{j.theta_L[1] * qL, j.theta_H[1] * qH};
    out.outgoing = {o0, o1};
    // Sum of what actually enters, so incoming and outgoing match exactly.
    out.incoming = {{o0.L + o1.L, o0.H + o1.H}};
  }
  return out;
}

std::vector<JunctionFlux> apply_junctions(const Network& net, std::span<RoadGrid* const> grids,
                                          std::span<const FdConfig> fds) {
  std::vector<JunctionFlux> all;
  all.reserve(net.junctions.size());
  for (const auto& j : net.junctions) {
    std::vector<Endpoint> up, down;
    for (auto r : j.incoming) up.push_back({grids[r]->cells.back(), &fds[r]});
    for (auto r : j.outgoing) down.push_back({grids[r]->cells.front(), &fds[r]});
    auto f = junction_fluxes(j, up, down);
    for (std::size_t k = 0; k < j.incoming.size(); ++k)
      grids[j.incoming[k]]->right_bc = BoundaryCondition::prescribed(f.incoming[k]);
    for (std::size_t k = 0; k < j.outgoing.size(); ++k)
      grids[j.outgoing[k]]->left_bc = BoundaryCondition::prescribed(f.outgoing[k]);
    all.push_back(std::move(f));
  }
  return all;
}

std::vector<JunctionFlux> apply_junctions(Network& net, std::span<const FdConfig> fds) {
  std::vector<RoadGrid*> grids;
  for (auto& r : net.roads) grids.push_back(&r.grid);
  return apply_junctions(net, grids, fds);
}

namespace {

struct Shares {
  std::vector<double> L, H;  // per path
};

double share_of(double part, double total, double fallback) {
  return total > 0 ? part / total : fallback;
}

}  // namespace

PathDensities decompose_paths(const Network& net, const std::vector<JunctionFlux>* last_fluxes) {
  net.validate();
  const auto np = net.paths.size();
  PathDensities pd;
  pd.fields.resize(net.roads.size());
  for (std::size_t r = 0; r < net.roads.size(); ++r) {
    const auto& cells = net.roads[r].grid.cells;
    std::vector<std::size_t> on;  // paths through r
    for (std::size_t k = 0; k < np; ++k)
      if (std::ranges::find(net.paths[k], r) != net.paths[k].end()) on.push_back(k);

    Shares w{std::vector<double>(np, 0.0), std::vector<double>(np, 0.0)};
    if (on.size() == 1) {
      w.L[on[0]] = w.H[on[0]] = 1.0;
    } else if (!on.empty()) {
      const auto jd = net.junction_downstream_of(r);
      const auto ju = net.junction_upstream_of(r);
      if (jd && net.junctions[*jd].kind == Junction::Kind::Diverge) {
        const auto& j = net.junctions[*jd];
        for (auto k : on) {
          const auto& path = net.paths[k];
          const auto it = std::ranges::find(path, r);
          if (it + 1 == path.end()) continue;
          const auto branch = std::ranges::find(j.outgoing, *(it + 1)) - j.outgoing.begin();
          // Several paths on one branch share its fraction equally.
          std::size_t same = 0;
          for (auto m : on) {
            const auto jt = std::ranges::find(net.paths[m], r);
            if (jt + 1 != net.paths[m].end() && *(jt + 1) == *(it + 1)) ++same;
          }
          w.L[k] = j.theta_L[branch] / static_cast<double>(same);
          w.H[k] = j.theta_H[branch] / static_cast<double>(same);
        }
      } else if (ju && net.junctions[*ju].kind == Junction::Kind::Merge) {
        const auto jidx = *ju;
        const auto& j = net.junctions[jidx];
        std::array<double, 2> sL{j.priority, 1.0 - j.priority}, sH = sL;
        if (last_fluxes && jidx < last_fluxes->size()) {
          const auto& f = (*last_fluxes)[jidx].incoming;
          const double tL = f[0].L + f[1].L, tH = f[0].H + f[1].H;
          sL = {share_of(f[0].L, tL, sL[0]), share_of(f[1].L, tL, sL[1])};
          sH = {share_of(f[0].H, tH, sH[0]), share_of(f[1].H, tH, sH[1])};
        }
        for (auto k : on) {
          const auto& path = net.paths[k];
          const auto it = std::ranges::find(path, r);
          if (it == path.begin()) continue;
          const auto branch = std::ranges::find(j.incoming, *(it - 1)) - j.incoming.begin();
          std::size_t same = 0;
          for (auto m : on) {
            const auto jt = std::ranges::find(net.paths[m], r);
            if (jt != net.paths[m].begin() && *(jt - 1) == *(it - 1)) ++same;
          }
          w.L[k] = sL[branch] / static_cast<double>(same);
          w.H[k] = sH[branch] / static_cast<double>(same);
        }
      } else {
        for (auto k : on) w.L[k] = w.H[k] = 1.0 / static_cast<double>(on.size());
      }
    }
    auto& road = pd.fields[r];
    road.assign(np, std::vector<TwoClassState>(cells.size()));
    for (std::size_t k = 0; k < np; ++k)
      for (std::size_t i = 0; i < cells.size(); ++i)
        road[k][i] = {w.L[k] * cells[i].rho_L, w.H[k] * cells[i].rho_H};
    // A road on no path keeps its mass in component 0 so recombination is exact.
    if (on.empty() && np > 0) road[0] = cells;
  }
  return pd;
}

std::vector<std::vector<TwoClassState>> recombine(const PathDensities& pd) {
  std::vector<std::vector<TwoClassState>> out(pd.fields.size());
  for (std::size_t r = 0; r < pd.fields.size(); ++r) {
    if (pd.fields[r].empty()) continue;
    out[r].assign(pd.fields[r][0].size(), {});
    for (const auto& path : pd.fields[r])
      for (std::size_t i = 0; i < path.size(); ++i) {
        out[r][i].rho_L += path[i].rho_L;
        out[r][i].rho_H += path[i].rho_H;
      }
  }
  return out;
}

std::optional<std::size_t> destination(const Network& net, std::size_t road, const Truck& truck) {
  const auto jd = net.junction_downstream_of(road);
  if (!jd) return std::nullopt;
  const auto& j = net.junctions[*jd];
  if (j.kind == Junction::Kind::Merge) return j.outgoing[0];
  if (truck.path < net.paths.size()) {
    const auto& path = net.paths[truck.path];
    const auto it = std::ranges::find(path, road);
    if (it != path.end() && it + 1 != path.end()) return *(it + 1);
  }
  return j.theta_H[0] >= j.theta_H[1] ? j.outgoing[0] : j.outgoing[1];
}

void set_downstream_obstacles(const Network& net, std::vector<MultiscaleState>& roads) {
  for (std::size_t r = 0; r < roads.size(); ++r) {
    auto& fleet = roads[r].fleet;
    fleet.downstream.reset();
    if (fleet.empty()) continue;
    const auto d = destination(net, r, fleet.trucks.back());
    if (!d || roads[*d].fleet.empty()) continue;
    const auto& rear = roads[*d].fleet.trucks.front();
    fleet.downstream = Obstacle{roads[r].grid.length_km + rear.x_km, rear.v_kmh};
  }
}

TransferReport transfer_trucks(const Network& net, std::vector<MultiscaleState>& roads,
                               const std::vector<MultiscaleSolver>& solvers, double t_h) {
  struct Candidate {
    std::size_t road;
    TruckId id;
  };
  TransferReport rep;
  std::vector<Candidate> cand;
  for (std::size_t r = 0; r < roads.size(); ++r) {
    auto& fleet = roads[r].fleet;
    const double len = roads[r].grid.length_km;
    if (!net.junction_downstream_of(r)) {
      while (!fleet.empty() && fleet.trucks.back().x_km >= len) {
        rep.exited.push_back(fleet.trucks.back().id);
        fleet.scripts.erase(fleet.trucks.back().id);
        fleet.trucks.pop_back();
      }
      continue;
    }
    // At most one truck per road can be handed over per call; the rest wait.
    if (!fleet.empty() && fleet.trucks.back().x_km >= len) cand.push_back({r, fleet.trucks.back().id});
  }
  std::ranges::sort(cand, [](const Candidate& a, const Candidate& b) {
    return std::tie(a.road, a.id) < std::tie(b.road, b.id);
  });

  std::vector<bool> touched(roads.size(), false);
  for (const auto& c : cand) {
    auto& from = roads[c.road];
    Truck t = from.fleet.trucks.back();
    const auto d = destination(net, c.road, t);
    Truck moved = t;
    moved.road = *d;
    if (solvers[*d].try_insert(roads[*d], moved)) {
      if (auto it = from.fleet.scripts.find(t.id); it != from.fleet.scripts.end()) {
        roads[*d].fleet.scripts.insert(*it);
        from.fleet.scripts.erase(it);
      }
      from.fleet.trucks.pop_back();
      rep.moved.push_back({t_h, t.id, c.road, *d});
      touched[c.road] = touched[*d] = true;
    } else {
      auto& held = from.fleet.trucks.back();
      held.x_km = std::nextafter(from.grid.length_km, -std::numeric_limits<double>::infinity());
      held.v_kmh = 0.0;
      rep.held.push_back(t.id);
    }
  }
  for (std::size_t r = 0; r < roads.size(); ++r)
    if (touched[r]) multiscale::refresh_registry(roads[r].grid, roads[r].fleet);
  return rep;
}

FdConfig lane_generalization(const FdConfig& base, int n, int n_H) {
  if (n_H < 1 || n_H >= n) {
    std::ostringstream os;
    os << "lane counts (n=" << n << ", n_H=" << n_H
       << ") violate 1 <= n_H < n; cars could not pass a truck jam";
    throw ConfigError({os.str()});
  }
  ClassParams light = base.light, heavy = base.heavy;
  const double sL = static_cast<double>(n) / base.light.lanes_usable;
  const double sH = static_cast<double>(n_H) / base.heavy.lanes_usable;
  light.lanes_usable = n;
  heavy.lanes_usable = n_H;
  auto cfg = FdConfig::make(light, heavy, base.f_L_peak_free * sL, base.f_L_peak_jammed * sL,
                            base.f_H_peak_free * sH, base.v_L_star_jammed);
  const double threshold = static_cast<double>(n - n_H) / n * cfg.rho_L_max;
  if (std::abs(cfg.transition_level - threshold) > fd::kRelTol * cfg.rho_L_max)
    throw std::logic_error("transition level disagrees with the lane-count threshold");
  return cfg;
}

}  // namespace network
}  // namespace twoflow

#include "twoflow/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace twoflow {

namespace {

TwoClassState initial_state(const RoadSpec& r, double x) {
  TwoClassState s;
  for (const auto& p : r.light)
    if (x >= p.from_km && x < p.to_km) s.rho_L = p.at(x);
  for (const auto& p : r.heavy)
    if (x >= p.from_km && x < p.to_km) s.rho_H = p.at(x);
  return s;
}

const BcSpec& active(const std::vector<BcSpec>& schedule, double t_s) {
  const BcSpec* cur = &schedule.front();
  for (const auto& b : schedule)
    if (b.from_s <= t_s + 1e-9) cur = &b;
  return *cur;
}

}  // namespace

std::vector<double> max_car_density(const RoadGrid& grid, const FdConfig& fd) {
  std::vector<double> out(grid.n_cells());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = fd::rho_star_L(std::clamp(grid.cells[i].rho_H, 0.0, fd.rho_H_max), fd);
  return out;
}

Simulation::Simulation(const Scenario& s, Exec exec) : scenario_(s), exec_(exec) {
  if (auto errors = check_scenario(s); !errors.empty()) throw ScenarioError(errors);
  if (s.dt_s == 0.0 && s.horizon_s > 0) throw ScenarioError({"dt_s must be > 0 for a positive horizon"});

  for (const auto& r : s.roads) {
    Road road{r.id, RoadGrid::uniform(r.length_km, s.dx_km), r.lanes, r.truck_lanes};
    for (std::size_t i = 0; i < road.grid.n_cells(); ++i)
      road.grid.cells[i] = initial_state(r, road.grid.cell_center_km(i));
    fds_.push_back(road_fd(s.fd, r));
    net_.roads.push_back(std::move(road));
  }
  for (const auto& js : s.junctions) {
    Junction j;
    j.kind = js.kind == "merge" ? Junction::Kind::Merge : Junction::Kind::Diverge;
    for (const auto& id : js.incoming) j.incoming.push_back(*net_.road_index(id));
    for (const auto& id : js.outgoing) j.outgoing.push_back(*net_.road_index(id));
    j.priority = js.priority;
    j.theta_L = js.theta_L;
    j.theta_H = js.theta_H;
    net_.junctions.push_back(j);
  }
  for (const auto& p : s.paths) {
    std::vector<std::size_t> path;
    for (const auto& id : p) path.push_back(*net_.road_index(id));
    net_.paths.push_back(std::move(path));
  }
  net_.validate();

  const double dt_h = s.dt_s / 3600.0;
  inflow_.resize(s.roads.size());
  if (s.model == ModelKind::Macro) {
    for (std::size_t r = 0; r < s.roads.size(); ++r)
      macro_.emplace_back(fds_[r], dt_h, s.dx_km, MacroOptions{true, true, exec});
    return;
  }

  const auto micro = s.micro.to_config();
  const CouplingSchedule sched{dt_h, micro.euler_dt_h};
  for (std::size_t r = 0; r < s.roads.size(); ++r) {
    const auto& spec = s.roads[r];
    micro_.emplace_back(fds_[r], micro, sched, s.dx_km, exec);
    MultiscaleState st{net_.roads[r].grid, {}, {}, 0.0};
    std::vector<TruckSpec> trucks = spec.trucks;
    if (spec.truck_fill) {
      const auto& f = *spec.truck_fill;
      const auto n = static_cast<std::size_t>(std::ceil((f.to_km - f.from_km) / f.spacing_km - 1e-9));
      for (std::size_t k = 0; k < n; ++k) trucks.push_back({f.from_km + k * f.spacing_km, f.v_kmh, 0, {}});
    }
    std::ranges::sort(trucks, {}, &TruckSpec::x_km);
    for (const auto& t : trucks) {
      const TruckId id = next_id_++;
      st.fleet.trucks.push_back({id, t.x_km, t.v_kmh, r, t.path});
      if (!t.script.empty()) {
        SpeedProfile p;
        for (const auto& k : t.script) {
          p.t_h.push_back(k.t_s / 3600.0);
          p.v_kmh.push_back(k.v_kmh);
        }
        st.fleet.scripts.emplace(id, std::move(p));
      }
    }
    micro_.back().refresh(st);
    ms_.push_back(std::move(st));
    if (spec.truck_inflow) inflow_[r] = {true, *spec.truck_inflow, spec.truck_inflow->start_s, 0};
  }
}

const RoadGrid& Simulation::grid(std::size_t r) const {
  return scenario_.model == ModelKind::Macro ? net_.roads[r].grid : ms_[r].grid;
}

std::size_t Simulation::steps_to_horizon() const {
  if (scenario_.horizon_s <= 0 || scenario_.dt_s <= 0) return 0;
  return static_cast<std::size_t>(std::ceil(scenario_.horizon_s / scenario_.dt_s - 1e-9));
}

void Simulation::apply_schedules() {
  const double t = t_s();
  for (std::size_t r = 0; r < net_.roads.size(); ++r) {
    auto& g = scenario_.model == ModelKind::Macro ? net_.roads[r].grid : ms_[r].grid;
    const auto& spec = scenario_.roads[r];
    if (!net_.junction_upstream_of(r)) g.left_bc = active(spec.left_bc, t).to_bc();
    if (!net_.junction_downstream_of(r)) g.right_bc = active(spec.right_bc, t).to_bc();
  }
}

void Simulation::macro_step() {
  junction_fluxes_ = network::apply_junctions(net_, fds_);
  for (std::size_t r = 0; r < net_.roads.size(); ++r) macro_[r].step(net_.roads[r].grid);
}

void Simulation::release_inflow(double t) {
  for (std::size_t r = 0; r < inflow_.size(); ++r) {
    auto& in = inflow_[r];
    if (!in.active) continue;
    while (in.next_s <= t + 1e-9 && in.next_s < in.spec.until_s) {
      ++in.pending;
      in.next_s += in.spec.headway_s;
    }
    if (in.pending == 0) continue;
    const Truck truck{next_id_, 0.0, in.spec.v_kmh, r, in.spec.path};
    if (micro_[r].try_insert(ms_[r], truck)) {
      ++next_id_;
      --in.pending;
      ++stats_.inserted;
    }
  }
}

void Simulation::multiscale_step() {
  std::vector<RoadGrid*> grids;
  for (auto& st : ms_) grids.push_back(&st.grid);
  junction_fluxes_ = network::apply_junctions(net_, grids, fds_);
  for (std::size_t r = 0; r < ms_.size(); ++r) micro_[r].car_step(ms_[r]);

  const double dt_micro = scenario_.micro.to_config().euler_dt_h;
  const int n = micro_.front().substeps();
  for (int k = 0; k < n; ++k) {
    const double tk = t_h_ + k * dt_micro;
    network::set_downstream_obstacles(net_, ms_);
    for (std::size_t r = 0; r < ms_.size(); ++r) {
      MultiscaleStepReport rep;
      micro_[r].truck_substep(ms_[r], tk, rep);
      stats_.collisions += rep.collisions.size();
      stats_.gate_holds += rep.holds.size();
    }
    const auto tr = network::transfer_trucks(net_, ms_, micro_, tk + dt_micro);
    stats_.transfers += tr.moved.size();
    stats_.transfer_holds += tr.held.size();
    stats_.exited += tr.exited.size();
    transfers_.insert(transfers_.end(), tr.moved.begin(), tr.moved.end());
    release_inflow((tk + dt_micro) * 3600.0);
  }
  for (std::size_t r = 0; r < ms_.size(); ++r) {
    ms_[r].t_h = t_h_ + scenario_.dt_s / 3600.0;
    micro_[r].refresh(ms_[r]);
  }
}

void Simulation::step() {
  apply_schedules();
  if (scenario_.model == ModelKind::Macro) macro_step();
  else multiscale_step();
  ++stats_.macro_steps;
  t_h_ = static_cast<double>(stats_.macro_steps) * scenario_.dt_s / 3600.0;
}

void Simulation::record(RunResult& out) const {
  const auto row = out.times_s.size();
  out.times_s.push_back(t_s());
  const bool macro = scenario_.model == ModelKind::Macro;
  for (std::size_t r = 0; r < n_roads(); ++r) {
    const auto& g = grid(r);
    const auto& fd = fds_[r];
    auto& rec = out.roads[r];
    const auto n = g.n_cells();
    for (const auto& q : scenario_.output.quantities) {
      std::vector<double> L(n), H(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& s = g.cells[i];
        if (q == "density") {
          L[i] = s.rho_L;
          H[i] = s.rho_H;
        } else if (q == "velocity") {
          L[i] = fd::v_L(s, fd);
          H[i] = fd::v_H(s, fd);
        } else {
          L[i] = fd::f_L(s, fd);
          H[i] = fd::f_H(s, fd);
        }
      }
      rec.fields["light_" + q].push_back(std::move(L));
      if (macro) rec.fields["heavy_" + q].push_back(std::move(H));
    }
    if (!macro) {
      rec.fields["heavy_effective"].push_back(ms_[r].effective_rho_H);
      rec.fields["light_maxdensity"].push_back(max_car_density(g, fd));
    }
  }
  if (!macro && row % static_cast<std::size_t>(scenario_.output.trajectory_thinning) == 0) {
    for (std::size_t r = 0; r < ms_.size(); ++r)
      for (const auto& t : ms_[r].fleet.trucks) out.trajectories.push_back({t_s(), t.id, r, t.x_km, t.v_kmh});
  }
}

RunResult Simulation::run(const std::function<void(const Simulation&)>& on_step) {
  const auto start = std::chrono::steady_clock::now();
  RunResult out;
  out.scenario = scenario_;
  for (std::size_t r = 0; r < n_roads(); ++r) {
    RoadRecord rec;
    rec.id = net_.roads[r].id;
    const auto& g = grid(r);
    for (std::size_t i = 0; i < g.n_cells(); ++i) rec.centers_km.push_back(g.cell_center_km(i));
    out.roads.push_back(std::move(rec));
  }
  const double interval = scenario_.output.interval_s;
  const auto last = static_cast<std::size_t>(std::ceil(scenario_.horizon_s / interval - 1e-9));
  record(out);
  std::size_t next = 1;
  const auto steps = steps_to_horizon();
  for (std::size_t k = 0; k < steps; ++k) {
    step();
    if (on_step) on_step(*this);
    while (next <= last && t_s() >= static_cast<double>(next) * interval - 1e-9 * interval) {
      record(out);
      ++next;
    }
  }
  for (; next <= last; ++next) record(out);
  out.stats = stats_;
  out.transfers = transfers_;
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace twoflow

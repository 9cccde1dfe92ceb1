#pragma once

// Small road networks: merges (2 -> 1) and diverges (1 -> 2), path-based
// density bookkeeping and microscopic truck hand-over between roads.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twoflow/ctm.hpp"
#include "twoflow/fd.hpp"
#include "twoflow/ftl.hpp"
#include "twoflow/multiscale.hpp"

namespace twoflow {

struct Road {
  std::string id;
  RoadGrid grid;
  int lanes = 2;
  int truck_lanes = 1;
};

struct Junction {
  enum class Kind { Merge, Diverge };

  Kind kind = Kind::Merge;
  std::vector<std::size_t> incoming;  // road indices
  std::vector<std::size_t> outgoing;
  double priority = 0.5;                // merge: share of incoming[0] when supply binds
  std::array<double, 2> theta_L{1, 0};  // diverge: fraction to outgoing[j]
  std::array<double, 2> theta_H{1, 0};
};

const char* to_string(Junction::Kind kind);

struct Network {
  std::vector<Road> roads;
  std::vector<Junction> junctions;
  std::vector<std::vector<std::size_t>> paths;  // road-index sequences

  /// Arity, index range, priority and split checks; throws ConfigError with all problems.
  void validate() const;

  std::optional<std::size_t> junction_downstream_of(std::size_t road) const;
  std::optional<std::size_t> junction_upstream_of(std::size_t road) const;
  std::optional<std::size_t> road_index(const std::string& id) const;
};

/// A road end as seen by a junction.
struct Endpoint {
  TwoClassState state;
  const FdConfig* cfg = nullptr;
};

struct JunctionFlux {
  std::vector<ClassFlux> incoming;  // leaving each incoming road
  std::vector<ClassFlux> outgoing;  // entering each outgoing road
};

/// Per path, per road: the part of each cell's densities travelling along it.
struct PathDensities {
  std::vector<std::vector<std::vector<TwoClassState>>> fields;  // [road][path][cell]
};

struct TruckTransfer {
  double t_h = 0.0;
  TruckId truck = 0;
  std::size_t from = 0;
  std::size_t to = 0;
};

struct TransferReport {
  std::vector<TruckTransfer> moved;
  std::vector<TruckId> held;
  std::vector<TruckId> exited;
};

namespace network {

/// Demand-supply merge for one class. Unused priority share is passed to the other road.
std::array<double, 2> merge_allocation(double s1, double s2, double r, double p);

/// Total flux out of a diverge for one class: min(S, R_j / theta_j), theta_j > 0.
double diverge_total(double s, double r1, double r2, double theta1, double theta2);

JunctionFlux junction_fluxes(const Junction& j, std::span<const Endpoint> up,
                             std::span<const Endpoint> down);

/// Computes every junction's fluxes from the current end cells and installs
/// them as prescribed boundary fluxes. Returns one JunctionFlux per junction.
/// grids[r] is road r's grid (the network's own grids in the second form).
std::vector<JunctionFlux> apply_junctions(const Network& net, std::span<RoadGrid* const> grids,
                                          std::span<const FdConfig> fds);
std::vector<JunctionFlux> apply_junctions(Network& net, std::span<const FdConfig> fds);

/// Splits road densities along paths. Next to a diverge the incoming road is
/// split by theta; downstream of a merge by the given flux shares (or by the
/// priority when none are known).
PathDensities decompose_paths(const Network& net,
                              const std::vector<JunctionFlux>* last_fluxes = nullptr);

/// Sum over paths, per road.
std::vector<std::vector<TwoClassState>> recombine(const PathDensities& pd);

/// Road the truck moves to at the downstream end of `road`, if any.
std::optional<std::size_t> destination(const Network& net, std::size_t road, const Truck& truck);

/// Makes each road's front truck follow the rearmost truck of its destination.
void set_downstream_obstacles(const Network& net, std::vector<MultiscaleState>& roads);

/// Moves trucks that passed their road end. Candidates are processed in
/// (road index, truck id) order; a truck that cannot enter waits at the end
/// of its road with V = 0. Trucks on roads without a downstream junction leave.
TransferReport transfer_trucks(const Network& net, std::vector<MultiscaleState>& roads,
                               const std::vector<MultiscaleSolver>& solvers, double t_h);

/// FdConfig for n car lanes of which n_H are usable by trucks. Peak fluxes scale
/// with the lane counts relative to `base`; throws ConfigError unless 1 <= n_H < n.
FdConfig lane_generalization(const FdConfig& base, int n, int n_H);

}  // namespace network
}  // namespace twoflow

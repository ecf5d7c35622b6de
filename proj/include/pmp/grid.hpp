#pragma once

#include "pmp/core_model.hpp"

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

namespace pmp {

/// Mixed-radix joint node index, robot 0 most significant.
using NodeId = std::uint64_t;

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Origin-anchored product lattice {k h} restricted to one robot's state box.
struct RobotLattice {
  double h = 0.0;
  std::vector<std::int64_t> first;  // lowest lattice index per axis
  std::vector<std::int64_t> count;  // nodes per axis
  std::size_t size = 0;

  int dim() const { return static_cast<int>(first.size()); }
  /// Per-axis lattice indices of a local node (axis 0 least significant).
  std::vector<std::int64_t> indices(std::size_t local) const;
  /// Local node of the given indices, or -1 if outside the lattice.
  std::int64_t local_of(const std::vector<std::int64_t>& idx) const;
  Vec coord(std::size_t local) const;
  /// Local nodes within `radius` of `center`, ascending.
  std::vector<std::size_t> within(const Vec& center, double radius) const;
  std::size_t nearest(const Vec& p) const;
};

RobotLattice build_lattice(const Box& box, double h);

struct GridStage {
  int index = 0;
  double h = 0.0;
  double eps = 0.0;
  std::shared_ptr<const Scenario> scenario;
  std::vector<RobotLattice> lattices;
  std::vector<std::vector<Vec>> coords;          // [robot][local]
  std::vector<std::vector<char>> goal_proximate;  // [robot][local]: d(x_i, G_i) <= M_i eps + h
  std::vector<NodeId> stride;                     // joint radix per robot
  NodeId node_count = 0;

  std::size_t robots() const { return lattices.size(); }
  std::size_t local(NodeId id, std::size_t robot) const {
    return static_cast<std::size_t>((id / stride[robot]) % lattices[robot].size);
  }
  std::vector<std::size_t> decode(NodeId id) const;
  NodeId encode(const std::vector<std::size_t>& locals) const;
  TeamState state(NodeId id) const;
  /// Squared 2-norm distance between a node and a team state.
  double dist2(NodeId id, const TeamState& p) const;
  double proximity_radius(std::size_t robot) const;
};

/// Throws ScheduleError unless eps > 2h.
GridStage build_stage(const Scenario& scenario, double h, double eps, int index = 0);

/// Membership bitmap plus ascending member list.
struct NodeSet {
  std::vector<char> mask;
  std::vector<NodeId> list;

  bool contains(NodeId id) const { return id < mask.size() && mask[id] != 0; }
  std::size_t size() const { return list.size(); }
};

/// S^p. With expand, nodes within h of S under a separable distance estimate.
NodeSet safety_nodes(const GridStage& stage, bool expand);

/// Robot indices i with d(x_i, X_i^G) <= M_i eps + h.
std::vector<std::size_t> goal_proximity_set(const GridStage& stage, NodeId x);
bool all_goal_proximate(const GridStage& stage, NodeId x);

/// Nodes that differ from x only in the positions of goal-proximate robots,
/// those positions staying goal-proximate. Ascending; always contains x.
std::vector<NodeId> equivalent_nodes(const GridStage& stage, NodeId x);

/// Joint nodes within 2-norm `radius` of `center`, ascending.
std::vector<NodeId> nodes_within(const GridStage& stage, const TeamState& center, double radius);

/// Nearest member of `restrict` to `point`; distance ties within 1e-12 go to the lowest id.
/// Throws LookupError when `restrict` is empty.
NodeId nearest_node(const GridStage& stage, const TeamState& point, const std::vector<NodeId>& restrict);

/// For each coarse node, the fine node with identical coordinates. Throws ScheduleError
/// if the lattices are not nested.
std::vector<NodeId> nesting_map(const GridStage& coarse, const GridStage& fine);

}  // namespace pmp

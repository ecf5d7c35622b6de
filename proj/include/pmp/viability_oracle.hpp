#pragma once

#include "pmp/grid.hpp"
#include "pmp/pareto.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pmp {

struct OracleOptions {
  double t_max = 0.0;           // multiple of h
  int control_density = 9;
  std::size_t cap = 10000;      // space-time lattice points
  double shadow = -1.0;         // truncation shadow; negative means eps + 2h
};

/// Brute-force discrete dynamics of one stage, built independently of the planner's cache.
struct OracleInstance {
  const GridStage* stage = nullptr;
  NodeSet safety;
  OracleOptions options;
  int steps = 0;  // time lattice holds 0..steps (units of h)
  double alpha = 0.0;
  double kappa = 0.0;
  std::vector<std::vector<std::vector<Vec>>> endpoints;        // [robot][local][sample]: x + eps f(x, u)
  std::vector<std::vector<std::vector<std::size_t>>> moves;    // [robot][local]: nodes within alpha of an endpoint

  std::size_t time_points() const;  // (steps + 1)^N
  std::size_t size() const { return static_cast<std::size_t>(stage->node_count) * time_points(); }
  double shadow() const;
};

/// Throws ValidationError when the space-time lattice exceeds the cap, DomainError when
/// t_max is not a multiple of h or a workspace has more than two dimensions.
OracleInstance make_oracle(const GridStage& stage, const NodeSet& safety, const OracleOptions& options);

/// Untransformed arrival-time estimates per node.
struct ThetaTable {
  int stage = 0;
  int sweep = 0;
  std::vector<ParetoSet> values;
};

/// {0_N} on S^p, {+inf 1_N} elsewhere.
ThetaTable theta_init(const OracleInstance& oracle);
/// One Pareto Bellman step on every node; an empty successor set yields {+inf 1_N}.
ThetaTable theta_step(const ThetaTable& table, const OracleInstance& oracle);

struct SpaceTimeNode {
  NodeId x = 0;
  std::vector<int> t;  // units of h

  bool operator==(const SpaceTimeNode& o) const { return x == o.x && t == o.t; }
  bool operator<(const SpaceTimeNode& o) const { return x != o.x ? x < o.x : t < o.t; }
};

/// Gamma^p(x, t) on the truncated lattice, sorted. `clipped` reports successors dropped for t_i > t_max.
std::vector<SpaceTimeNode> gamma_step(const OracleInstance& oracle, const SpaceTimeNode& node, bool* clipped = nullptr);

struct SpaceTimeSet {
  int stage = 0;
  int sweep = 0;
  std::vector<char> mask;  // index x * time_points + mixed-radix t, robot 0 most significant

  bool contains(std::size_t index) const { return mask[index] != 0; }
  std::size_t count() const;
};

std::size_t spacetime_index(const OracleInstance& oracle, NodeId x, const std::vector<int>& t);

/// S_0 = S^p x time lattice, S_{n+1} = S_n ∩ {(x,t) : Gamma(x,t) ∩ S_n nonempty}.
/// `reverse` visits points in descending order; the result does not depend on it.
std::vector<SpaceTimeSet> viability_recursion(const OracleInstance& oracle, int n_steps, bool reverse = false);

struct Counterexample {
  NodeId node = 0;
  std::vector<int> t;
  bool in_viability = false;
  bool in_epigraph = false;
};

struct EquivalenceReport {
  bool ok = true;
  std::size_t checked = 0;
  std::optional<Counterexample> first;
};

/// Compares S_n with Epi(Theta_n) on safety nodes, skipping times within the truncation
/// shadow of t_max. Throws DomainError if the two come from different stages or sweeps.
EquivalenceReport epi_equivalence_check(const OracleInstance& oracle, const ThetaTable& theta, const SpaceTimeSet& s_n);

std::string counterexample_json(const OracleInstance& oracle, const Counterexample& c);

/// Distance from p to the convex hull of `points` (1 or 2 dimensions).
double hull_distance(const std::vector<Vec>& points, const Vec& p);

}  // namespace pmp

#pragma once

#include "pmp/grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pmp {

/// alpha_p = 2h + eps h l+ + eps^2 l+ M+
double alpha(double h, double eps, double l_plus, double m_plus);
/// kappa_p = (ceil(eps/h) - 2) h. Throws ScheduleError unless eps > 2h.
double kappa(double h, double eps);

/// Transformed minimal time increment: 0 for goal-proximate robots, 1 - exp(-kappa) otherwise.
Vec time_increment(const GridStage& stage, NodeId x);

/// Regular sample of a control box, `density` points per non-degenerate axis,
/// axis 0 varying fastest.
std::vector<Vec> control_samples(const Box& control_box, int density);

/// Which sampled controls a successor node is credited to.
enum class ControlAttribution {
  kNearestEndpoint,  // controls whose endpoint x + eps f(x,u) is closest to the node
  kAllReaching,      // every control whose alpha-ball contains the node
};

struct DiscretizationOptions {
  int control_density = 9;
  ControlAttribution attribution = ControlAttribution::kNearestEndpoint;
};

/// One robot's share of the set-valued dynamics at one of its lattice nodes.
struct RobotSuccessor {
  std::uint32_t node = 0;              // local lattice node
  std::vector<std::int32_t> controls;  // sample indices credited with reaching it; empty when frozen
};

/// Per-robot successor lists for a whole stage. Joint successors of x are the product of
/// the robots' lists at x's coordinates, filtered by the safety set.
struct SuccessorCache {
  const GridStage* stage = nullptr;
  NodeSet safety;
  double alpha = 0.0;
  double kappa = 0.0;
  double delta = 0.0;  // 1 - exp(-kappa)
  DiscretizationOptions options;
  std::vector<std::vector<Vec>> controls;                        // [robot][sample]
  std::vector<std::vector<std::vector<RobotSuccessor>>> robots;  // [robot][local]

  /// Calls visit(successor, per-robot entry indices) for every joint successor of x, ascending.
  template <typename F>
  void for_each_successor(NodeId x, F&& visit) const;
  std::vector<NodeId> merged(NodeId x) const;
  Vec time_increment(NodeId x) const;
};

SuccessorCache build_successor_cache(const GridStage& stage, const NodeSet& safety,
                                     const DiscretizationOptions& options = {});

/// Explicit set-valued dynamics of one node: one record per team control sample.
struct SuccessorSet {
  NodeId node = 0;
  struct Sample {
    std::vector<std::int32_t> control;  // per-robot sample index, -1 for frozen robots
    std::vector<NodeId> successors;
  };
  std::vector<Sample> samples;
  std::vector<NodeId> merged;
  std::vector<char> frozen;  // per robot: goal-proximate, so time increment 0
};

/// Builds tilde-X(x) from scratch: per team control sample, product of per-robot alpha-balls
/// around the endpoints, intersected with safety. Frozen robots stay put.
SuccessorSet successors(const GridStage& stage, NodeId x, const NodeSet& safety,
                        const DiscretizationOptions& options = {});

/// Binary cache file with a versioned header.
void save_successor_cache(const SuccessorCache& cache, std::uint64_t scenario_hash, const std::string& path);
/// Loads per-robot lists into `cache` if the header matches; returns false otherwise.
bool load_successor_cache(SuccessorCache& cache, std::uint64_t scenario_hash, const std::string& path);

template <typename F>
void SuccessorCache::for_each_successor(NodeId x, F&& visit) const {
  const std::size_t n = stage->robots();
  std::size_t locals[16];
  std::uint32_t pick[16];
  for (std::size_t i = 0; i < n; ++i) locals[i] = stage->local(x, i);
  // odometer over the per-robot lists, robot n-1 fastest so ids come out ascending
  for (std::size_t i = 0; i < n; ++i) {
    if (robots[i][locals[i]].empty()) return;
    pick[i] = 0;
  }
  while (true) {
    NodeId id = 0;
    for (std::size_t i = 0; i < n; ++i) id += static_cast<NodeId>(robots[i][locals[i]][pick[i]].node) * stage->stride[i];
    if (safety.mask[id]) visit(id, static_cast<const std::uint32_t*>(pick));
    std::size_t i = n;
    while (i-- > 0) {
      if (++pick[i] < robots[i][locals[i]].size()) break;
      pick[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
}

}  // namespace pmp

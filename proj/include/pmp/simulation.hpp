#pragma once

#include "pmp/planner.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace pmp {

/// Policy used in closed loop: a primary stage plus an optional goal-refinement stage that
/// takes over wherever its region test holds.
struct PolicyView {
  const StageResult* primary = nullptr;
  const StageResult* refined = nullptr;
};

PolicyView policy_view(const PlanResult& plan);

struct Lookup {
  std::vector<Vec> control;     // per robot, inside its control box
  std::vector<char> approach;   // robot steered by the terminal-approach rule
  NodeId node = 0;
  bool dead_end = false;        // node carries no policy entries although it is swept
};

/// Nearest safety node (ties to the lowest id), then a uniform draw among its distinct team controls.
/// Robots the entry leaves frozen, and every robot at a node outside the swept set, get
/// approach_control.
Lookup policy_lookup(const StageResult& stage, const TeamState& state, std::mt19937_64& rng);

/// Sampled control of robot i that enters its goal earliest within one epoch of straight-line
/// motion, else the one ending closest to it (ties to the lowest index).
Vec approach_control(const StageResult& stage, std::size_t robot, const Vec& x);

struct Trajectory {
  std::vector<double> t;
  std::vector<TeamState> states;
  std::vector<std::vector<Vec>> controls;  // control applied on (t[k], t[k+1]]; last row repeats
  std::vector<double> pairwise;            // min pairwise distance per sample
  std::vector<double> clearance;           // min obstacle clearance per sample
  Vec arrival;                             // +inf when never reached
  double eps = 0.0;
  int dead_end_fallbacks = 0;
  bool left_workspace = false;
};

/// Closed-loop run: controls switch every eps, RK4 at eps/substeps, robots freeze on goal entry.
/// Throws DomainError when x0 is outside the safety region.
Trajectory simulate(const Scenario& scenario, const PolicyView& policy, const TeamState& x0, std::uint64_t seed,
                    double horizon, int substeps = 20);

struct TrajectoryMetrics {
  Vec arrival;
  bool all_arrived = false;
  double min_pairwise = 0.0;
  double min_clearance = 0.0;
  std::vector<double> pairwise_series;
  std::vector<std::vector<double>> speed_series;  // [robot][sample]
  int dead_end_fallbacks = 0;
  bool feasible = false;  // all arrived, pairwise >= sigma and clearance >= 0 throughout
};

TrajectoryMetrics trajectory_metrics(const Scenario& scenario, const Trajectory& traj);

}  // namespace pmp

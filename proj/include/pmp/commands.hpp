#pragma once

#include "pmp/io.hpp"
#include "pmp/viability_oracle.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pmp {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitValidation = 2,
  kExitInfeasible = 3,
  kExitCounterexample = 4,
};

struct RunConfig {
  std::string scenario_path;
  std::string schedule_path;  // empty: dyadic from h0 = 0.2 with eps = sqrt(h)
  std::string out_dir = "out";
  std::uint64_t seed = 7;
  int control_density = 9;
  bool expand_safety = false;
  bool goal_refine = false;
  int stages = 0;        // 0 keeps every scheduled stage (3 for the default schedule)
  double gamma = -1.0;   // negative keeps the schedule's value
  StopRule stop = StopRule::kRelDiff;
  double threshold = 0.1;
  double horizon = 60.0;
  double oracle_t_max = -1.0;  // negative: 12 h
  int oracle_sweeps = 10;
  std::size_t oracle_cap = 10000;
  std::size_t node_budget = 2000000;  // bench drops trailing stages above this joint node count
};

Json config_json(const RunConfig& cfg);
PlanOptions plan_options(const RunConfig& cfg);
/// Scenario and schedule after overrides; schedule validated against the scenario.
std::pair<Scenario, Schedule> load_run(const RunConfig& cfg);

/// Keeps the longest prefix whose joint node counts stay within `node_budget`.
Schedule fit_to_budget(const Scenario& sc, const Schedule& schedule, std::size_t node_budget);

struct BenchPoint {
  int stage = 0;
  int sweep = 0;
  double error = 0.0;
};

struct BenchResult {
  std::vector<BenchPoint> series;    // every sweep of every stage, in computation order
  std::vector<double> stage_final;   // error at the end of each stage
  std::vector<double> h;
};

/// Error of the nearest-node lift of every iterate against the finest stage's final values:
/// sqrt(sum over finest safety nodes of d_H(v_hat(x), v_star(x))^2).
BenchResult run_bench(const Scenario& sc, const Schedule& schedule, const PlanOptions& options);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Oracle suite on the first scheduled stage: S_n vs Epi(Theta_n), iteration-order independence
/// of the recursion, and Psi(Theta_n) against zero-initialized planner sweeps.
std::vector<VerifyCheck> verify_stage(const Scenario& sc, const StageSpec& spec, const RunConfig& cfg);

int cmd_plan(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg);
int cmd_bench(const RunConfig& cfg);

/// Runs a command, mapping parse/validation/schedule errors to exit code 2.
int run_guarded(int (*command)(const RunConfig&), const RunConfig& cfg);

}  // namespace pmp

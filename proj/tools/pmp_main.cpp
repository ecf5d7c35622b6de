#include "pmp/commands.hpp"

#include <CLI11.hpp>

#include <map>

int main(int argc, char** argv) {
  CLI::App app{"Pareto-optimal multi-robot motion planner"};
  app.require_subcommand(1);
  pmp::RunConfig cfg;

  const std::map<std::string, pmp::StopRule> stops{{"budget", pmp::StopRule::kBudget},
                                                   {"reldiff", pmp::StopRule::kRelDiff}};
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", cfg.scenario_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--schedule", cfg.schedule_path, "Schedule JSON")->check(CLI::ExistingFile);
    sub->add_option("--out", cfg.out_dir, "Output directory");
    sub->add_option("--seed", cfg.seed, "Random seed for control selection");
    sub->add_option("--control-density", cfg.control_density, "Control samples per axis")->check(CLI::PositiveNumber);
    sub->add_flag("--expand-safety", cfg.expand_safety, "Admit nodes within h of the safety region");
    sub->add_flag("--goal-refine", cfg.goal_refine, "Add a goal-neighborhood refinement stage");
    sub->add_option("--stages", cfg.stages, "Number of stages to run")->check(CLI::NonNegativeNumber);
    sub->add_option("--gamma", cfg.gamma, "Per-window contraction target");
    sub->add_option("--stop", cfg.stop, "Stopping rule")->transform(CLI::CheckedTransformer(stops, CLI::ignore_case));
    sub->add_option("--threshold", cfg.threshold, "Relative-difference threshold");
  };

  auto* plan = app.add_subcommand("plan", "Compute value functions and policies");
  add_common(plan);
  auto* simulate = app.add_subcommand("simulate", "Plan, then run the closed loop from the scenario start");
  add_common(simulate);
  simulate->add_option("--horizon", cfg.horizon, "Simulated time limit");
  auto* verify = app.add_subcommand("verify", "Check the planner against the viability-kernel oracle");
  add_common(verify);
  verify->add_option("--t-max", cfg.oracle_t_max, "Time-lattice truncation (default 12h)");
  verify->add_option("--oracle-sweeps", cfg.oracle_sweeps, "Recursion steps checked");
  verify->add_option("--oracle-cap", cfg.oracle_cap, "Maximum space-time lattice points");
  auto* bench = app.add_subcommand("bench", "Anytime error curve against the finest stage");
  add_common(bench);
  bench->add_option("--node-budget", cfg.node_budget, "Largest joint node count per stage");

  CLI11_PARSE(app, argc, argv);

  if (plan->parsed()) return pmp::run_guarded(pmp::cmd_plan, cfg);
  if (simulate->parsed()) return pmp::run_guarded(pmp::cmd_simulate, cfg);
  if (verify->parsed()) return pmp::run_guarded(pmp::cmd_verify, cfg);
  return pmp::run_guarded(pmp::cmd_bench, cfg);
}

#include "pmp/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>

namespace pmp {

namespace {

std::string stop_name(StopRule s) {
  switch (s) {
    case StopRule::kBudget: return "budget";
    case StopRule::kRelDiff: return "reldiff";
    case StopRule::kFixedPoint: return "fixed_point";
  }
  return "unknown";
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

Json full_config(const RunConfig& cfg, const Schedule& schedule) {
  Json j = config_json(cfg);
  j["schedule"] = schedule_to_json(schedule);
  return j;
}

Json stage_summary(const StageResult& st) {
  return Json{{"stage", st.stage.index},
              {"refinement", st.refinement},
              {"h", st.stage.h},
              {"eps", st.stage.eps},
              {"alpha", st.cache.alpha},
              {"kappa", st.cache.kappa},
              {"nodes", st.stage.node_count},
              {"safety_nodes", st.cache.safety.size()},
              {"sweeps", st.sweeps},
              {"dead_ends", st.dead_ends},
              {"convergence", st.convergence},
              {"warnings", st.warnings}};
}

Json timings_json(const PlanResult& plan) {
  Json a = Json::array();
  for (const auto& st : plan.stages) {
    a.push_back(Json{{"stage", st->stage.index},
                     {"refinement", st->refinement},
                     {"successors_s", st->timings.successors_s},
                     {"init_s", st->timings.init_s},
                     {"sweeps_s", st->timings.sweeps_s}});
  }
  return a;
}

std::string stage_tag(const StageResult& st) {
  return st.refinement ? "refine" : "stage" + std::to_string(st.stage.index);
}

}  // namespace

Json config_json(const RunConfig& cfg) {
  return Json{{"scenario", cfg.scenario_path},
              {"schedule", cfg.schedule_path},
              {"seed", cfg.seed},
              {"control_density", cfg.control_density},
              {"expand_safety", cfg.expand_safety},
              {"goal_refine", cfg.goal_refine},
              {"stages", cfg.stages},
              {"gamma", cfg.gamma},
              {"stop", stop_name(cfg.stop)},
              {"threshold", cfg.threshold},
              {"horizon", cfg.horizon},
              {"oracle_t_max", cfg.oracle_t_max},
              {"oracle_sweeps", cfg.oracle_sweeps},
              {"oracle_cap", cfg.oracle_cap},
              {"node_budget", cfg.node_budget}};
}

PlanOptions plan_options(const RunConfig& cfg) {
  PlanOptions o;
  o.discretization.control_density = cfg.control_density;
  o.expand_safety = cfg.expand_safety;
  o.goal_refine = cfg.goal_refine;
  o.stop = cfg.stop;
  o.threshold = cfg.threshold;
  return o;
}

std::pair<Scenario, Schedule> load_run(const RunConfig& cfg) {
  if (cfg.scenario_path.empty()) throw ParseError("--scenario is required");
  Scenario sc = load_scenario(cfg.scenario_path);
  Schedule s;
  if (cfg.schedule_path.empty()) {
    s = dyadic_schedule(0.2, cfg.stages > 0 ? cfg.stages : 3, EpsRule::kSqrtH, team_bounds(sc).m_plus);
  } else {
    s = load_schedule(cfg.schedule_path, sc);
    if (cfg.stages > 0 && static_cast<std::size_t>(cfg.stages) < s.stages.size()) s.stages.resize(cfg.stages);
  }
  if (cfg.gamma >= 0.0) s.gamma = cfg.gamma;
  validate_schedule(s, sc);
  return {std::move(sc), std::move(s)};
}

Schedule fit_to_budget(const Scenario& sc, const Schedule& schedule, std::size_t node_budget) {
  Schedule out = schedule;
  out.stages.clear();
  for (std::size_t k = 0; k < schedule.stages.size(); ++k) {
    const auto& spec = schedule.stages[k];
    if (build_stage(sc, spec.h, spec.eps, static_cast<int>(k)).node_count > node_budget) break;
    out.stages.push_back(spec);
  }
  if (out.stages.empty()) throw ValidationError("node_budget", "the coarsest stage exceeds the node budget");
  return out;
}

BenchResult run_bench(const Scenario& sc, const Schedule& schedule, const PlanOptions& options) {
  std::vector<const StageResult*> order;
  std::map<const StageResult*, std::vector<ValueFunction>> snaps;
  PlanOptions opts = options;
  opts.goal_refine = false;
  opts.extract_policy = false;
  const PlanResult result = plan(sc, schedule, opts, [&](const StageResult& st, const ValueFunction& v, int n) {
    if (n == 0) order.push_back(&st);
    snaps[&st].push_back(v);
  });
  const StageResult& fine = result.final_stage();
  const ValueFunction& v_star = fine.v_final;
  const auto& nodes = fine.cache.safety.list;
  BenchResult out;
  for (const StageResult* st : order) {
    std::vector<NodeId> lift(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      lift[k] = st == &fine ? nodes[k] : nearest_in_set(st->stage, fine.stage.state(nodes[k]), st->cache.safety);
    }
    const auto& series = snaps[st];
    double last = 0.0;
    for (std::size_t n = 0; n < series.size(); ++n) {
      double sum = 0.0;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double d = hausdorff(series[n].at(lift[k]), v_star.at(nodes[k]));
        sum += d * d;
      }
      last = std::sqrt(sum);
      out.series.push_back({st->stage.index, static_cast<int>(n), last});
    }
    out.stage_final.push_back(last);
    out.h.push_back(st->stage.h);
  }
  return out;
}

std::vector<VerifyCheck> verify_stage(const Scenario& sc, const StageSpec& spec, const RunConfig& cfg) {
  const int sweeps = cfg.oracle_sweeps;
  Schedule single;
  single.stages.push_back({spec.h, spec.eps, sweeps});
  PlanOptions opts = plan_options(cfg);
  opts.goal_refine = false;
  opts.stop = StopRule::kBudget;
  opts.zero_init = true;
  opts.extract_policy = false;
  std::vector<ValueFunction> snaps;
  const PlanResult result =
      plan(sc, single, opts, [&](const StageResult&, const ValueFunction& v, int) { snaps.push_back(v); });
  const StageResult& st = result.final_stage();

  OracleOptions oo;
  oo.t_max = cfg.oracle_t_max < 0.0 ? 12.0 * spec.h : cfg.oracle_t_max;
  oo.control_density = cfg.control_density;
  oo.cap = cfg.oracle_cap;
  const OracleInstance oracle = make_oracle(st.stage, st.cache.safety, oo);
  const auto s_fwd = viability_recursion(oracle, sweeps);
  const auto s_rev = viability_recursion(oracle, sweeps, true);

  std::vector<VerifyCheck> checks;
  ThetaTable theta = theta_init(oracle);
  std::size_t skipped = 0;
  double worst = 0.0;
  for (int n = 0; n <= sweeps; ++n) {
    if (n > 0) theta = theta_step(theta, oracle);
    const auto rep = epi_equivalence_check(oracle, theta, s_fwd[static_cast<std::size_t>(n)]);
    VerifyCheck c{"epi_equivalence_n" + std::to_string(n), rep.ok, std::to_string(rep.checked) + " points"};
    if (rep.first) c.detail = counterexample_json(oracle, *rep.first);
    checks.push_back(c);
    const ValueFunction& v = snaps[std::min(static_cast<std::size_t>(n), snaps.size() - 1)];
    for (NodeId x : st.cache.safety.list) {
      if (st.updated[x] && st.cache.merged(x).empty()) {
        ++skipped;
        continue;
      }
      std::vector<Vec> psi;
      const ParetoSet& t = theta.values[x];
      for (std::size_t k = 0; k < t.size(); ++k) psi.push_back(kruzhkov(t.at(k)));
      worst = std::max(worst, hausdorff(pareto_frontier(psi), v.at(x)));
    }
  }
  checks.push_back({"kruzhkov_commutation", worst <= 1e-9,
                    "max d_H " + format_double(worst) + ", dead-end nodes skipped " + std::to_string(skipped)});
  bool same = true;
  for (std::size_t n = 0; n < s_fwd.size(); ++n) same = same && s_fwd[n].mask == s_rev[n].mask;
  checks.push_back({"recursion_order_independence", same, std::to_string(s_fwd.size()) + " sets"});
  return checks;
}

int cmd_plan(const RunConfig& cfg) {
  const auto [sc, schedule] = load_run(cfg);
  const PlanResult result = plan(sc, schedule, plan_options(cfg));
  const std::uint64_t hash = scenario_hash(sc);
  const Json config = full_config(cfg, schedule);
  Json stages = Json::array();
  for (const auto& st : result.stages) {
    stages.push_back(stage_summary(*st));
    if (st.get() == &result.final_stage() || st->refinement) {
      write_value_dump(out_path(cfg, "values_" + stage_tag(*st) + ".jsonl"), *st, hash, config);
      write_policy_dump(out_path(cfg, "policy_" + stage_tag(*st) + ".jsonl"), *st, hash, config);
    }
  }
  const Json summary{{"scenario_hash", hash_hex(hash)}, {"config", config}, {"stages", stages}};
  write_text(out_path(cfg, "plan_summary.json"), summary.dump(2) + "\n");
  write_text(out_path(cfg, "timings.json"), Json{{"stages", timings_json(result)}}.dump(2) + "\n");
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto [sc, schedule] = load_run(cfg);
  if (sc.start.empty()) throw ValidationError("start_state", "scenario has no start state");
  const PlanResult result = plan(sc, schedule, plan_options(cfg));
  const Trajectory traj = simulate(sc, policy_view(result), sc.start, cfg.seed, cfg.horizon);
  const TrajectoryMetrics m = trajectory_metrics(sc, traj);
  const std::uint64_t hash = scenario_hash(sc);
  const Json config = full_config(cfg, schedule);
  write_trajectory_csv(out_path(cfg, "trajectory.csv"), sc, traj,
                       {"scenario_hash=" + hash_hex(hash), "config=" + config.dump()});
  Json metrics = metrics_to_json(m);
  metrics["scenario_hash"] = hash_hex(hash);
  metrics["config"] = config;
  write_text(out_path(cfg, "metrics.json"), metrics.dump(2) + "\n");
  write_text(out_path(cfg, "timings.json"), Json{{"stages", timings_json(result)}}.dump(2) + "\n");
  if (!m.feasible) {
    std::cerr << "simulation infeasible: arrived=" << m.all_arrived << " min_pairwise=" << m.min_pairwise
              << " min_clearance=" << m.min_clearance << "\n";
    return kExitInfeasible;
  }
  return kExitOk;
}

int cmd_verify(const RunConfig& cfg) {
  const auto [sc, schedule] = load_run(cfg);
  const auto checks = verify_stage(sc, schedule.stages.front(), cfg);
  bool ok = true;
  Json list = Json::array();
  for (const auto& c : checks) {
    ok = ok && c.pass;
    list.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
  }
  const Json report{{"scenario_hash", hash_hex(scenario_hash(sc))},
                    {"config", full_config(cfg, schedule)},
                    {"pass", ok},
                    {"checks", list}};
  write_text(out_path(cfg, "verify_report.json"), report.dump(2) + "\n");
  return ok ? kExitOk : kExitCounterexample;
}

int cmd_bench(const RunConfig& cfg) {
  const auto [sc, full] = load_run(cfg);
  const Schedule schedule = fit_to_budget(sc, full, cfg.node_budget);
  const auto t0 = std::chrono::steady_clock::now();
  const BenchResult b = run_bench(sc, schedule, plan_options(cfg));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Json series = Json::array();
  for (const auto& p : b.series) series.push_back(Json{{"stage", p.stage}, {"sweep", p.sweep}, {"error", p.error}});
  const Json out{{"scenario_hash", hash_hex(scenario_hash(sc))},
                 {"config", full_config(cfg, schedule)},
                 {"h", b.h},
                 {"stage_final_error", b.stage_final},
                 {"series", series}};
  write_text(out_path(cfg, "bench.json"), out.dump(2) + "\n");
  write_text(out_path(cfg, "timings.json"), Json{{"bench_s", elapsed}}.dump(2) + "\n");
  for (std::size_t k = 0; k < b.h.size(); ++k) {
    std::cout << "stage " << k << " h=" << b.h[k] << " final error " << b.stage_final[k] << "\n";
  }
  return kExitOk;
}

int run_guarded(int (*command)(const RunConfig&), const RunConfig& cfg) {
  try {
    return command(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "validation error [" << e.invariant() << "]: " << e.what() << "\n";
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
  } catch (const ScheduleError& e) {
    std::cerr << "schedule error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitValidation;
}

}  // namespace pmp

// Acceptance run: one [PASS]/[FAIL] line per criterion, nonzero exit if any fails.
// Pass criterion numbers as arguments to run a subset.

#include "pmp/commands.hpp"

#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace pmp;
using namespace pmp::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string scenario_file(const std::string& name) { return std::string(PMP_SOURCE_DIR) + "/scenarios/" + name; }

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- shared instances ----

Scenario criterion1_scenario() { return line_scenario(-1.0, 1.0, -0.05, 0.05); }

Schedule criterion1_schedule() {
  Schedule s;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) s.stages.push_back({h, std::sqrt(h), -1});
  return s;
}

StageSpec criterion2_stage() { return {0.1, 0.25, -1}; }

// Zero-value invariant and equivalent-node equality; returns the number of violations.
std::size_t value_invariant_violations(const StageResult& st, const ValueFunction& v) {
  std::size_t bad = 0;
  const auto& safety = st.cache.safety;
  const std::size_t n = st.stage.robots();
  for (NodeId x : safety.list) {
    const ParetoSet s = v.at(x);
    for (std::size_t i = 0; i < n; ++i) {
      if (!st.stage.goal_proximate[i][st.stage.local(x, i)]) continue;
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.point(k)[i] != 0.0) ++bad;
      }
    }
    for (NodeId y : equivalent_nodes(st.stage, x)) {
      if (safety.contains(y) && !v.same(x, v, y)) ++bad;
    }
  }
  return bad;
}

// Small random instances: one robot on a line, or two robots on crossing segments.
struct MicroInstance {
  Scenario scenario;
  Schedule schedule;
  int density = 5;
};

MicroInstance random_micro(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](std::initializer_list<double> xs) { return *(xs.begin() + static_cast<std::ptrdiff_t>(u(rng) * xs.size() * 0.999999)); };
  MicroInstance m;
  const double h = 0.1;
  const double eps = 0.21 + 0.2 * u(rng);
  m.schedule.stages.push_back({h, eps, -1});
  m.density = 3 + static_cast<int>(u(rng) * 5);
  if (u(rng) < 0.3) {
    const double lo = -pick({0.3, 0.5, 0.7}), hi = pick({0.3, 0.5, 0.7});
    const double g = lo + (hi - lo) * u(rng);
    const double w = 0.15 * u(rng);
    m.scenario = line_scenario(lo, hi, std::max(lo, g - w), std::min(hi, g + w), 0.5 + u(rng));
    return m;
  }
  Scenario& sc = m.scenario;
  sc.name = "micro";
  sc.sigma = 0.02 + 0.1 * u(rng);
  const double back0 = pick({0.1, 0.2, 0.3}), front0 = pick({0.3, 0.4, 0.5});
  const double back1 = pick({0.1, 0.2, 0.3}), front1 = pick({0.3, 0.4, 0.5});
  for (int i = 0; i < 2; ++i) {
    const double speed = 0.1 + 0.2 * u(rng);
    sc.robots.push_back(u(rng) < 0.5 ? unicycle(i, -M_PI, M_PI, speed) : integrator2d(i, speed / std::sqrt(2.0)));
    sc.obstacles.push_back({});
  }
  sc.state_boxes.push_back(box2(-back0, 0.0, front0, 0.0));
  sc.state_boxes.push_back(box2(0.0, -back1, 0.0, front1));
  const double g0 = front0 - (u(rng) < 0.5 ? 0.0 : 0.1), g1 = front1 - (u(rng) < 0.5 ? 0.0 : 0.1);
  sc.goals.push_back(Region{{box2(g0, 0.0, front0, 0.0)}});
  sc.goals.push_back(Region{{box2(0.0, g1, 0.0, front1)}});
  return m;
}

// Plans random micro-instances until `wanted` were accepted by validation.
template <typename Observer>
std::size_t run_micro(std::uint64_t seed, std::size_t wanted, bool zero_init, Observer&& observe) {
  std::mt19937_64 rng(seed);
  std::size_t accepted = 0, attempts = 0;
  while (accepted < wanted && attempts < wanted * 20) {
    ++attempts;
    const MicroInstance m = random_micro(rng);
    PlanOptions opt;
    opt.stop = StopRule::kFixedPoint;
    opt.zero_init = zero_init;
    opt.extract_policy = false;
    opt.discretization.control_density = m.density;
    try {
      validate_scenario(m.scenario);
      plan(m.scenario, m.schedule, opt, observe);
    } catch (const ValidationError&) {
      continue;  // goal standoff or separation rejected the draw
    }
    ++accepted;
  }
  return accepted;
}

// ---- criteria ----

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  PlanOptions opt;
  opt.stop = StopRule::kFixedPoint;
  const PlanResult pr = plan(criterion1_scenario(), criterion1_schedule(), opt);
  const double elapsed = seconds_since(t0);
  std::vector<double> err;
  for (const auto& sp : pr.stages) {
    const StageResult& st = *sp;
    double worst = 0.0;
    for (NodeId x : st.cache.safety.list) {
      const double pos = st.stage.state(x)[0][0];
      const double exact = 1.0 - std::exp(-std::max(0.0, std::abs(pos) - 0.05));
      const ParetoSet v = st.v_final.at(x);
      for (std::size_t k = 0; k < v.size(); ++k) worst = std::max(worst, std::abs(v.point(k)[0] - exact));
    }
    err.push_back(worst);
  }
  std::string series;
  for (double e : err) series += (series.empty() ? "" : ", ") + fmt(e);
  const bool pass = err.back() <= 0.15 && err.back() < err.front() && elapsed < 30.0;
  return {pass, "sup error per stage [" + series + "] (finest <= 0.15 and < coarsest), " + fmt(elapsed, 3) + " s < 30 s"};
}

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  cfg.oracle_sweeps = 10;
  const auto checks = verify_stage(crossing_pair(), criterion2_stage(), cfg);
  const double elapsed = seconds_since(t0);
  int passed = 0, total = 0;
  std::string failures;
  for (const auto& c : checks) {
    if (c.name.rfind("epi_equivalence_n", 0) != 0) continue;
    ++total;
    if (c.pass) ++passed;
    else failures += " " + c.name + " " + c.detail;
  }
  const bool pass = total == 11 && passed == total && elapsed < 60.0;
  return {pass, std::to_string(passed) + "/" + std::to_string(total) + " sweeps with zero counterexamples, " +
                    fmt(elapsed, 3) + " s < 60 s" + failures};
}

Outcome criterion3() {
  std::string detail;
  bool pass = true;
  for (bool zero : {false, true}) {
    Schedule s;
    s.stages.push_back(criterion2_stage());
    PlanOptions opt;
    opt.stop = StopRule::kFixedPoint;
    opt.zero_init = zero;
    opt.extract_policy = false;
    std::vector<ValueFunction> snaps;
    const PlanResult pr = plan(crossing_pair(), s, opt, [&](const StageResult&, const ValueFunction& v, int) { snaps.push_back(v); });
    const StageResult& st = pr.final_stage();
    const ValueFunction& v_inf = snaps.back();
    const double factor = std::exp(-st.cache.kappa);
    auto sup_distance = [&](const ValueFunction& v) {
      double worst = 0.0;
      for (NodeId x : st.cache.safety.list) worst = std::max(worst, frontier_distance(v.at(x), v_inf.at(x)));
      return worst;
    };
    int measured = 0, violations = 0;
    double worst_ratio = 0.0;
    for (std::size_t n = 0; n + 1 < snaps.size(); ++n) {
      const double before = sup_distance(snaps[n]), after = sup_distance(snaps[n + 1]);
      ++measured;
      if (after > factor * before + 1e-9) ++violations;
      if (before > 0.0) worst_ratio = std::max(worst_ratio, after / before);
    }
    pass = pass && violations == 0 && measured > 0;
    detail += std::string(detail.empty() ? "" : "; ") + (zero ? "zero init" : "default init") + ": " +
              std::to_string(measured) + " sweeps, " + std::to_string(violations) + " violations, worst ratio " +
              fmt(worst_ratio) + " vs e^-kappa " + fmt(factor);
  }
  return {pass, detail};
}

Outcome criterion4() {
  std::size_t violations = 0, sweeps = 0;
  auto observe = [&](const StageResult& st, const ValueFunction& v, int) {
    violations += value_invariant_violations(st, v);
    ++sweeps;
  };
  PlanOptions opt;
  opt.stop = StopRule::kFixedPoint;
  opt.extract_policy = false;
  plan(criterion1_scenario(), criterion1_schedule(), opt, observe);
  Schedule s2;
  s2.stages.push_back(criterion2_stage());
  plan(crossing_pair(), s2, opt, observe);
  opt.zero_init = true;
  plan(crossing_pair(), s2, opt, observe);
  const std::size_t micro = run_micro(404, 500, false, observe);
  const bool pass = violations == 0 && micro == 500;
  return {pass, std::to_string(violations) + " violations over " + std::to_string(sweeps) + " iterates (" +
                    std::to_string(micro) + " micro-instances)"};
}

Outcome criterion5() {
  std::size_t violations = 0, pairs = 0;
  std::map<const StageResult*, ValueFunction> last;
  auto observe = [&](const StageResult& st, const ValueFunction& v, int n) {
    if (n > 0) {
      const ValueFunction& prev = last.at(&st);
      for (NodeId x : st.cache.safety.list) {
        const ParetoSet before = prev.at(x), after = v.at(x);
        for (std::size_t k = 0; k < after.size(); ++k) {
          if (!epi_contains(before, after.at(k))) ++violations;
        }
      }
      ++pairs;
    }
    last[&st] = v;
  };
  PlanOptions opt;
  opt.stop = StopRule::kFixedPoint;
  opt.zero_init = true;
  opt.extract_policy = false;
  plan(criterion1_scenario(), criterion1_schedule(), opt, observe);
  last.clear();
  Schedule s2;
  s2.stages = {criterion2_stage(), StageSpec{0.05, 0.17, -1}};
  plan(crossing_pair(), s2, opt, observe);
  last.clear();
  const std::size_t micro = run_micro(505, 100, true, [&](const StageResult& st, const ValueFunction& v, int n) {
    if (n == 0) last.clear();
    observe(st, v, n);
  });
  return {violations == 0 && pairs > 0,
          std::to_string(violations) + " violations over " + std::to_string(pairs) + " consecutive iterates (" +
              std::to_string(micro) + " micro-instances included)"};
}

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig cfg;
  cfg.scenario_path = scenario_file("intersection_2robot.json");
  cfg.stages = 1;
  const auto [sc, schedule] = load_run(cfg);
  const PlanResult pr = plan(sc, schedule, plan_options(cfg));
  int ok = 0;
  double lowest = std::numeric_limits<double>::infinity();
  std::string failed;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Trajectory tr = simulate(sc, policy_view(pr), sc.start, seed, cfg.horizon);
    const TrajectoryMetrics m = trajectory_metrics(sc, tr);
    lowest = std::min(lowest, m.min_pairwise);
    if (m.all_arrived && m.min_pairwise >= sc.sigma && tr.dead_end_fallbacks == 0) ++ok;
    else failed += " " + std::to_string(seed);
  }
  const double elapsed = seconds_since(t0);
  const bool pass = ok >= 18 && elapsed < 600.0;
  return {pass, std::to_string(ok) + "/20 feasible runs (need 18), lowest min pairwise distance " + fmt(lowest) +
                    " vs sigma " + fmt(sc.sigma) + ", " + fmt(elapsed, 3) + " s < 600 s" +
                    (failed.empty() ? "" : "; infeasible seeds:" + failed)};
}

Outcome criterion7() {
  RunConfig cfg;
  cfg.scenario_path = scenario_file("intersection_2robot.json");
  cfg.schedule_path = scenario_file("intersection_schedule.json");
  const auto [sc, full] = load_run(cfg);
  const Schedule schedule = fit_to_budget(sc, full, cfg.node_budget);
  const BenchResult b = run_bench(sc, schedule, plan_options(cfg));
  bool pass = b.stage_final.size() >= 3;
  for (std::size_t k = 2; k < b.stage_final.size(); ++k) pass = pass && b.stage_final[k] <= b.stage_final[k - 1];
  std::string hs, es;
  for (std::size_t k = 0; k < b.h.size(); ++k) {
    hs += (k ? ", " : "") + fmt(b.h[k]);
    es += (k ? ", " : "") + fmt(b.stage_final[k]);
  }
  return {pass, "stages h [" + hs + "] (node budget " + std::to_string(cfg.node_budget) + "), stage-final error [" + es +
                    "] non-increasing from stage 2"};
}

Outcome criterion8() {
  const auto t0 = std::chrono::steady_clock::now();
  const int cases = 10000;
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> dim_dist(1, 4), count_dist(1, 12);
  std::uniform_real_distribution<double> eta_dist(0.01, 0.4);
  std::size_t frontier_bad = 0, hausdorff_bad = 0, union_bad = 0;
  for (int c = 0; c < cases; ++c) {
    const int dim = dim_dist(rng);
    auto pts = random_points(rng, static_cast<std::size_t>(count_dist(rng)), dim);
    if (c % 3 == 0) {
      // coarse values force ties and duplicates
      for (auto& p : pts) p = (p * 4.0).array().round() / 4.0;
    }
    const ParetoSet f = pareto_frontier(pts);
    if (pareto_frontier(f.points()) != f) ++frontier_bad;
    for (const auto& q : f.points()) {
      bool member = false;
      for (const auto& p : pts) member = member || (p.unaryExpr([](double v) { return quantize(v); }) - q).norm() == 0.0;
      if (!member) ++frontier_bad;
      for (const auto& r : f.points()) {
        if (r != q && dominates(r, q)) ++frontier_bad;
      }
    }
    for (const auto& p : pts) {
      if (!epi_contains(f, p.unaryExpr([](double v) { return quantize(v); }).eval())) ++frontier_bad;
    }
  }
  for (int c = 0; c < cases; ++c) {
    const int dim = dim_dist(rng);
    const auto a = random_points(rng, static_cast<std::size_t>(count_dist(rng)), dim);
    const auto b = random_points(rng, static_cast<std::size_t>(count_dist(rng)), dim);
    const auto d = random_points(rng, static_cast<std::size_t>(count_dist(rng)), dim);
    if (hausdorff(a, a) != 0.0) ++hausdorff_bad;
    if (hausdorff(a, b) != hausdorff(b, a)) ++hausdorff_bad;
    if (hausdorff(a, d) > hausdorff(a, b) + hausdorff(b, d) + 1e-12) ++hausdorff_bad;
  }
  for (int c = 0; c < cases; ++c) {
    const int dim = dim_dist(rng);
    const auto a = random_points(rng, static_cast<std::size_t>(count_dist(rng)), dim);
    const auto b = random_points(rng, static_cast<std::size_t>(count_dist(rng)), dim);
    std::vector<Vec> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double eta = eta_dist(rng);
    auto near = [&](const std::vector<Vec>& s, const Vec& p) {
      for (const auto& q : s) {
        if ((p - q).norm() <= eta) return true;
      }
      return false;
    };
    for (const auto& p : random_points(rng, 20, dim, -0.3, 1.3)) {
      if ((near(a, p) || near(b, p)) != near(ab, p)) ++union_bad;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool pass = frontier_bad == 0 && hausdorff_bad == 0 && union_bad == 0 && elapsed < 30.0;
  return {pass, std::to_string(cases) + " cases per property; failures: frontier " + std::to_string(frontier_bad) +
                    ", hausdorff " + std::to_string(hausdorff_bad) + ", expansion-union " + std::to_string(union_bad) +
                    ", " + fmt(elapsed, 3) + " s < 30 s"};
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name == "timings.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[name] = ss.str();
  }
  return out;
}

Outcome criterion9() {
  const fs::path root = fs::temp_directory_path() / "pmp_acceptance_determinism";
  std::string detail;
  bool pass = true;
  for (const char* name : {"line_1robot.json", "intersection_2robot.json"}) {
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
      const fs::path dir = root / (std::string(name) + std::to_string(r));
      fs::remove_all(dir);
      fs::create_directories(dir);
      RunConfig cfg;
      cfg.scenario_path = scenario_file(name);
      cfg.stages = 1;
      cfg.seed = 11;
      cfg.out_dir = dir.string();
      const int plan_rc = cmd_plan(cfg);
      const int sim_rc = cmd_simulate(cfg);
      (void)plan_rc;
      (void)sim_rc;
      runs[r] = artifacts(dir);
    }
    const bool same = runs[0] == runs[1] && runs[0].size() >= 5;
    pass = pass && same;
    detail += std::string(detail.empty() ? "" : "; ") + name + ": " + std::to_string(runs[0].size()) + " artifacts " +
              (same ? "byte-identical" : "differ");
  }
  fs::remove_all(root);
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> all = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  std::set<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));
  int failures = 0;
  for (const auto& [id, run] : all) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << o.detail << " [" << fmt(seconds_since(t0), 3)
              << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

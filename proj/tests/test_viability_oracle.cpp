#include "pmp/viability_oracle.hpp"

#include "pmp/io.hpp"
#include "pmp/planner.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <set>

using namespace pmp;
using namespace pmp::testing;

namespace {

struct Instance {
  GridStage stage;
  NodeSet safety;
  OracleInstance oracle;
};

std::unique_ptr<Instance> make_instance(const Scenario& sc, double h, double eps, double t_max) {
  auto in = std::make_unique<Instance>();
  in->stage = build_stage(sc, h, eps);
  in->safety = safety_nodes(in->stage, false);
  in->oracle = make_oracle(in->stage, in->safety, OracleOptions{t_max, 9, 10000, -1.0});
  return in;
}

// Hand-rolled untransformed dynamic programming over the oracle's move lists (one robot).
std::vector<double> dp_step(const Instance& in, const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t a = 0; a < v.size(); ++a) {
    const bool prox = in.stage.goal_proximate[0][a];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < v.size(); ++b) {
      if (!in.safety.contains(b)) continue;
      if (prox ? a != b : std::abs(in.stage.coords[0][a][0] - in.stage.coords[0][b][0]) > in.oracle.alpha + in.stage.eps * in.stage.scenario->robots[0].speed_bound + 1e-9) {
        continue;
      }
      best = std::min(best, v[b] + (prox ? 0.0 : in.oracle.kappa));
    }
    out[a] = best;
  }
  return out;
}

// Exhaustive one-robot Gamma membership, scanning lambda on a fine grid for the goal branch.
bool brute_gamma(const Instance& in, std::size_t x, int t, std::size_t y, int s) {
  const GridStage& st = in.stage;
  const double h = st.h, eps = st.eps;
  const double xi = st.coords[0][x][0], yi = st.coords[0][y][0];
  const auto& ends = in.oracle.endpoints[0][x];
  if (!st.goal_proximate[0][x]) {
    if (std::abs(s * h - (t * h - eps)) > 2 * h + 1e-9) return false;
    for (const auto& e : ends) {
      if (std::abs(yi - e[0]) <= in.oracle.alpha + 1e-9) return true;
    }
    return false;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& e : ends) {
    lo = std::min(lo, e[0] - xi);
    hi = std::max(hi, e[0] - xi);
  }
  const int grid = 200000;
  for (int k = 0; k <= grid; ++k) {
    const double lam = static_cast<double>(k) / grid;
    if (std::abs(s * h - (t * h - lam * eps)) > 2 * h + 1e-7) continue;
    const double r = yi - xi;
    const double d = r < lam * lo ? lam * lo - r : (r > lam * hi ? r - lam * hi : 0.0);
    if (d <= lam * in.oracle.alpha + (1 - lam) * 2 * h + 1e-7) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("oracle construction guards") {
  const Scenario sc = crossing_pair();
  const GridStage st = build_stage(sc, 0.1, 0.25);
  const NodeSet safe = safety_nodes(st, false);
  CHECK_THROWS_AS(make_oracle(st, safe, OracleOptions{1.25, 9, 10000, -1.0}), DomainError);
  CHECK_THROWS_AS(make_oracle(st, safe, OracleOptions{5.0, 9, 10000, -1.0}), ValidationError);
  const OracleInstance o = make_oracle(st, safe, OracleOptions{1.2, 9, 10000, -1.0});
  CHECK(o.steps == 12);
  CHECK(o.size() == 25 * 13 * 13);
  CHECK(o.shadow() == doctest::Approx(0.45));
}

TEST_CASE("Theta recursion on a one-robot chain matches hand DP") {
  const auto in = make_instance(line_scenario(0, 0.5, 0, 0, 0.1), 0.1, 0.21, 1.0);
  ThetaTable th = theta_init(in->oracle);
  std::vector<double> dp(in->stage.node_count, 0.0);
  for (int n = 0; n < 8; ++n) {
    for (NodeId x = 0; x < in->stage.node_count; ++x) {
      REQUIRE(th.values[x].size() == 1);
      CHECK(th.values[x].at(0)[0] == doctest::Approx(dp[x]).epsilon(1e-12));
    }
    th = theta_step(th, in->oracle);
    dp = dp_step(*in, dp);
  }
  CHECK(th.sweep == 8);
  CHECK(th.values[5].at(0)[0] == doctest::Approx(2 * in->oracle.kappa));
  CHECK(th.values[0].at(0)[0] == 0.0);  // goal-proximate node keeps its value
}

TEST_CASE("Theta step commutes with the transformed Bellman update") {
  const auto in = make_instance(crossing_pair(), 0.1, 0.25, 1.2);
  ThetaTable th = theta_init(in->oracle);
  for (int n = 0; n < 6; ++n) {
    ValueFunction v(2);
    for (const auto& s : th.values) {
      std::vector<Vec> pts;
      for (std::size_t k = 0; k < s.size(); ++k) pts.push_back(kruzhkov(s.at(k)));
      v.push_back(pareto_frontier(pts));
    }
    const ThetaTable next = theta_step(th, in->oracle);
    for (NodeId x : in->safety.list) {
      const auto succ = successors(in->stage, x, in->safety, {9});
      if (succ.merged.empty()) continue;
      const ParetoSet g = bellman_update(x, succ, time_increment(in->stage, x), v);
      std::vector<Vec> pts;
      for (std::size_t k = 0; k < next.values[x].size(); ++k) pts.push_back(kruzhkov(next.values[x].at(k)));
      CHECK(hausdorff(g, pareto_frontier(pts)) <= 1e-9);
    }
    th = next;
  }
}

TEST_CASE("Gamma time coordinates for a robot away from its goal") {
  const auto in = make_instance(line_scenario(0, 0.5, 0, 0, 0.1), 0.1, 0.21, 1.2);
  const std::size_t x = 5;
  REQUIRE_FALSE(in->stage.goal_proximate[0][x]);
  const auto g = gamma_step(in->oracle, {x, {10}});
  std::set<std::pair<std::size_t, int>> got;
  for (const auto& n : g) {
    CHECK(n.t[0] * 0.1 >= 1.0 - 0.21 - 0.2 - 1e-9);
    CHECK(n.t[0] * 0.1 <= 1.0 - 0.21 + 0.2 + 1e-9);
    got.insert({static_cast<std::size_t>(n.x), n.t[0]});
  }
  std::set<std::pair<std::size_t, int>> want;
  for (std::size_t y : in->oracle.moves[0][x]) {
    for (int s = 6; s <= 9; ++s) want.insert({y, s});  // [0.59, 0.99] on the h lattice
  }
  CHECK(got == want);
  CHECK(gamma_step(in->oracle, {x, {0}}).empty());
}

TEST_CASE("Gamma stay-put option in the goal branch") {
  const auto in = make_instance(line_scenario(0, 0.5, 0, 0, 0.1), 0.1, 0.21, 1.2);
  for (std::size_t x : {0, 1}) {
    REQUIRE(in->stage.goal_proximate[0][x]);
    for (int t = 0; t <= 12; ++t) {
      const auto g = gamma_step(in->oracle, {x, {t}});
      CHECK(std::find(g.begin(), g.end(), SpaceTimeNode{x, {t}}) != g.end());
    }
  }
  bool clipped = false;
  gamma_step(in->oracle, {0, {12}}, &clipped);
  CHECK(clipped);
}

TEST_CASE("Gamma on a 3-node lattice matches exhaustive enumeration") {
  const auto in = make_instance(line_scenario(0, 0.2, 0, 0, 0.1), 0.1, 0.21, 0.6);
  REQUIRE(in->stage.node_count == 3);
  CHECK(in->stage.goal_proximate[0][1]);
  CHECK_FALSE(in->stage.goal_proximate[0][2]);
  for (std::size_t x = 0; x < 3; ++x) {
    for (int t = 0; t <= 6; ++t) {
      std::set<std::pair<std::size_t, int>> got, want;
      for (const auto& n : gamma_step(in->oracle, {x, {t}})) got.insert({static_cast<std::size_t>(n.x), n.t[0]});
      for (std::size_t y = 0; y < 3; ++y) {
        for (int s = 0; s <= 6; ++s) {
          if (brute_gamma(*in, x, t, y, s)) want.insert({y, s});
        }
      }
      CHECK(got == want);
    }
  }
}

TEST_CASE("viability recursion basics") {
  SUBCASE("all states goal-proximate keeps S_n = S_0") {
    const auto in = make_instance(line_scenario(0, 0.2, 0, 0, 1.0), 0.1, 0.21, 0.6);
    const auto s = viability_recursion(in->oracle, 5);
    for (const auto& sn : s) CHECK(sn.mask == s.front().mask);
  }
  SUBCASE("points without successors leave at S_1") {
    const auto in = make_instance(line_scenario(0, 0.5, 0, 0, 0.1), 0.1, 0.21, 1.0);
    const auto s = viability_recursion(in->oracle, 1);
    const std::size_t idx = spacetime_index(in->oracle, 5, {0});
    CHECK(s[0].contains(idx));
    CHECK_FALSE(s[1].contains(idx));
  }
  SUBCASE("monotone shrinkage and order independence on two robots") {
    const auto in = make_instance(crossing_pair(), 0.1, 0.25, 1.2);
    const auto fwd = viability_recursion(in->oracle, 10);
    const auto rev = viability_recursion(in->oracle, 10, true);
    for (std::size_t n = 0; n < fwd.size(); ++n) {
      CHECK(fwd[n].mask == rev[n].mask);
      if (n == 0) continue;
      for (std::size_t k = 0; k < fwd[n].mask.size(); ++k) {
        if (fwd[n].mask[k]) CHECK(fwd[n - 1].mask[k]);
      }
    }
    CHECK(fwd.back().count() < fwd.front().count());
  }
}

TEST_CASE("epigraph equivalence on a one-robot line") {
  const auto in = make_instance(line_scenario(0, 0.4, 0, 0, 0.5), 0.1, 0.25, 3.0);
  const auto s = viability_recursion(in->oracle, 10);
  ThetaTable th = theta_init(in->oracle);
  for (int n = 0; n <= 10; ++n) {
    const auto rep = epi_equivalence_check(in->oracle, th, s[static_cast<std::size_t>(n)]);
    CHECK(rep.ok);
    CHECK(rep.checked > 0);
    if (n == 0) {
      for (NodeId x : in->safety.list) {
        for (int t = 0; t <= in->oracle.steps; ++t) CHECK(s[0].contains(spacetime_index(in->oracle, x, {t})));
      }
    }
    th = theta_step(th, in->oracle);
  }
}

TEST_CASE("a corrupted Theta yields a counterexample") {
  const auto in = make_instance(line_scenario(0, 0.4, 0, 0, 0.5), 0.1, 0.25, 3.0);
  const auto s = viability_recursion(in->oracle, 3);
  ThetaTable th = theta_init(in->oracle);
  for (int n = 0; n < 3; ++n) th = theta_step(th, in->oracle);
  ThetaTable bad = th;
  bad.values[4] = ParetoSet::singleton(v1(0.0));  // lowered below the true estimate
  const auto rep = epi_equivalence_check(in->oracle, bad, s[3]);
  REQUIRE_FALSE(rep.ok);
  REQUIRE(rep.first.has_value());
  CHECK(rep.first->node == 4);
  CHECK(rep.first->in_epigraph);
  CHECK_FALSE(rep.first->in_viability);
  const auto j = Json::parse(counterexample_json(in->oracle, *rep.first));
  CHECK(j["node"] == 4);
  CHECK(j.contains("coords"));

  CHECK_THROWS_AS(epi_equivalence_check(in->oracle, th, s[2]), DomainError);
}

TEST_CASE("hull distance") {
  const std::vector<Vec> sq = {v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1), v2(0.5, 0.5)};
  CHECK(hull_distance(sq, v2(0.5, 0.5)) == 0.0);
  CHECK(hull_distance(sq, v2(2, 0.5)) == doctest::Approx(1.0));
  CHECK(hull_distance(sq, v2(2, 2)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(hull_distance({v1(-1), v1(2)}, v1(3)) == doctest::Approx(1.0));
  CHECK(hull_distance({v2(0, 0), v2(2, 0)}, v2(1, 1)) == doctest::Approx(1.0));
}

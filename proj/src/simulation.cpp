#include "pmp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmp {

PolicyView policy_view(const PlanResult& plan) {
  PolicyView v;
  v.primary = &plan.final_stage();
  if (!plan.stages.empty() && plan.stages.back()->refinement) v.refined = plan.stages.back().get();
  return v;
}

Vec approach_control(const StageResult& st, std::size_t robot, const Vec& x) {
  constexpr int kProbes = 20;
  const auto& sc = *st.stage.scenario;
  const auto& r = sc.robots[robot];
  const auto& samples = st.cache.controls[robot];
  std::size_t best = 0;
  int best_entry = kProbes + 1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples.size(); ++k) {
    // straight-line probe of the epoch: first probe inside the goal, then final goal distance
    const Vec v = eval_dynamics(r, x, samples[k]);
    int entry = kProbes + 1;
    for (int j = 1; j <= kProbes; ++j) {
      if (sc.goals[robot].contains(x + (st.stage.eps * j / kProbes) * v)) {
        entry = j;
        break;
      }
    }
    const double d = sc.goals[robot].distance(x + st.stage.eps * v);
    if (entry < best_entry || (entry == best_entry && d < best_d - 1e-12)) {
      best_entry = entry;
      best_d = d;
      best = k;
    }
  }
  return samples[best];
}

Lookup policy_lookup(const StageResult& st, const TeamState& state, std::mt19937_64& rng) {
  const std::size_t n = st.stage.robots();
  Lookup out;
  out.node = nearest_in_set(st.stage, state, st.cache.safety);
  out.control.resize(n);
  out.approach.assign(n, 0);
  const std::size_t count = st.policy.count(out.node);
  std::vector<std::int32_t> team(n, -1);
  if (count > 0) {
    std::vector<std::uint64_t> distinct;
    for (const PolicyEntry* e = st.policy.begin(out.node); e != st.policy.begin(out.node) + count; ++e) {
      distinct.push_back(e->control);
    }
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    team = st.policy.decode(distinct[rng() % distinct.size()]);
  } else if (st.updated[out.node]) {
    out.dead_end = true;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (team[i] >= 0) {
      out.control[i] = st.policy.controls[i][static_cast<std::size_t>(team[i])];
    } else {
      out.control[i] = approach_control(st, i, state[i]);
      out.approach[i] = 1;
    }
  }
  return out;
}

namespace {

Vec rk4(const RobotSpec& r, const Vec& x, const Vec& u, double dt) {
  const Vec k1 = eval_dynamics(r, x, u);
  const Vec k2 = eval_dynamics(r, x + 0.5 * dt * k1, u);
  const Vec k3 = eval_dynamics(r, x + 0.5 * dt * k2, u);
  const Vec k4 = eval_dynamics(r, x + dt * k3, u);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double clearance(const Scenario& sc, std::size_t i, const Vec& x) {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& b : sc.obstacles[i].boxes) {
    c = std::min(c, b.contains(x, 0.0) ? -b.depth(x) : b.distance(x));
  }
  return c;
}

// Control in the box closest to zero; zero velocity for the built-in families.
Vec rest_control(const RobotSpec& r) {
  Vec u = Vec::Zero(r.control_dim);
  for (int k = 0; k < r.control_dim; ++k) u[k] = std::clamp(0.0, r.control_box.lo[k], r.control_box.hi[k]);
  return u;
}

}  // namespace

Trajectory simulate(const Scenario& sc, const PolicyView& policy, const TeamState& x0, std::uint64_t seed,
                    double horizon, int substeps) {
  if (policy.primary == nullptr) throw DomainError("simulate: no policy");
  if (!in_safety(sc, x0)) throw DomainError("simulate: start state outside the safety region");
  const std::size_t n = sc.size();
  const StageResult& base = *policy.primary;
  const double eps = base.stage.eps;
  const double dt = eps / substeps;
  std::mt19937_64 rng(seed);

  Trajectory tr;
  tr.eps = eps;
  tr.arrival = Vec::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
  TeamState x = x0;
  std::vector<char> frozen(n, 0);
  std::vector<Vec> rest(n);
  for (std::size_t i = 0; i < n; ++i) rest[i] = rest_control(sc.robots[i]);

  auto record = [&](double t, const std::vector<Vec>& u) {
    tr.t.push_back(t);
    tr.states.push_back(x);
    tr.controls.push_back(u);
    tr.pairwise.push_back(min_pairwise_distance(x));
    double c = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      c = std::min(c, clearance(sc, i, x[i]));
      if (!sc.state_boxes[i].contains(x[i], 1e-6)) tr.left_workspace = true;
    }
    tr.clearance.push_back(c);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (in_goal(sc, i, x[i])) {
      frozen[i] = 1;
      tr.arrival[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }

  std::vector<Vec> prev_control = rest;
  int hold_left = 0;  // epochs of hold-previous fallback still allowed
  bool held_last = false;
  const long epochs = static_cast<long>(std::ceil(horizon / eps - 1e-9));
  double t = 0.0;
  for (long k = 0; k < epochs; ++k) {
    if (std::all_of(frozen.begin(), frozen.end(), [](char f) { return f != 0; })) break;
    const StageResult* st = &base;
    if (policy.refined != nullptr) {
      for (std::size_t i = 0; i < n; ++i) {
        if (sc.goals[i].distance(x[i]) <= base.stage.proximity_radius(i) + kGeomTol) {
          st = policy.refined;
          break;
        }
      }
    }
    Lookup lk = policy_lookup(*st, x, rng);
    std::vector<Vec> u(n);
    if (lk.dead_end) {
      ++tr.dead_end_fallbacks;
      hold_left = held_last ? 0 : 1;
      for (std::size_t i = 0; i < n; ++i) u[i] = hold_left > 0 ? prev_control[i] : rest[i];
      held_last = hold_left > 0;
    } else {
      u = lk.control;
      held_last = false;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i]) u[i] = rest[i];
    }
    for (int s = 0; s < substeps; ++s) {
      record(t, u);
      for (std::size_t i = 0; i < n; ++i) {
        if (!frozen[i]) x[i] = rk4(sc.robots[i], x[i], u[i], dt);
      }
      t = eps * static_cast<double>(k) + dt * static_cast<double>(s + 1);
      for (std::size_t i = 0; i < n; ++i) {
        if (!frozen[i] && in_goal(sc, i, x[i])) {
          frozen[i] = 1;
          tr.arrival[static_cast<Eigen::Index>(i)] = t;
          u[i] = rest[i];
        }
      }
    }
    prev_control = u;
  }
  std::vector<Vec> last(n);
  for (std::size_t i = 0; i < n; ++i) last[i] = frozen[i] ? rest[i] : prev_control[i];
  record(t, last);
  return tr;
}

TrajectoryMetrics trajectory_metrics(const Scenario& sc, const Trajectory& tr) {
  if (tr.t.empty()) throw DomainError("trajectory_metrics: empty trajectory");
  const std::size_t n = sc.size();
  TrajectoryMetrics m;
  m.arrival = tr.arrival;
  m.all_arrived = tr.arrival.allFinite();
  m.min_pairwise = *std::min_element(tr.pairwise.begin(), tr.pairwise.end());
  m.min_clearance = *std::min_element(tr.clearance.begin(), tr.clearance.end());
  m.pairwise_series = tr.pairwise;
  m.speed_series.assign(n, {});
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool arrived = tr.t[k] >= tr.arrival[static_cast<Eigen::Index>(i)];
      m.speed_series[i].push_back(arrived ? 0.0 : eval_dynamics(sc.robots[i], tr.states[k][i], tr.controls[k][i]).norm());
    }
  }
  m.dead_end_fallbacks = tr.dead_end_fallbacks;
  m.feasible = m.all_arrived && m.min_pairwise >= sc.sigma - 1e-9 && m.min_clearance >= 0.0 && !tr.left_workspace;
  return m;
}

}  // namespace pmp

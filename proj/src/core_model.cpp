#include "pmp/core_model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace pmp {

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw DomainError("box bounds differ in dimension");
}

bool Box::contains(const Vec& p, double tol) const {
  if (p.size() != lo.size()) return false;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p[k] < lo[k] - tol || p[k] > hi[k] + tol) return false;
  }
  return true;
}

double Box::distance(const Vec& p) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    double d = 0.0;
    if (p[k] < lo[k]) d = lo[k] - p[k];
    else if (p[k] > hi[k]) d = p[k] - hi[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double Box::depth(const Vec& p) const {
  if (!contains(p, 0.0)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    best = std::min({best, p[k] - lo[k], hi[k] - p[k]});
  }
  return best;
}

double Box::distance(const Box& other) const {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    double gap = std::max({0.0, other.lo[k] - hi[k], lo[k] - other.hi[k]});
    acc += gap * gap;
  }
  return std::sqrt(acc);
}

bool Region::contains(const Vec& p, double tol) const {
  for (const auto& b : boxes) {
    if (b.contains(p, tol)) return true;
  }
  return false;
}

double Region::distance(const Vec& p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : boxes) best = std::min(best, b.distance(p));
  return best;
}

const char* to_string(DynamicsKind kind) {
  switch (kind) {
    case DynamicsKind::kSingleIntegrator2d: return "single_integrator_2d";
    case DynamicsKind::kUnicycle: return "unicycle";
    case DynamicsKind::kCustomAffine: return "custom_affine";
  }
  return "unknown";
}

DynamicsKind dynamics_kind_from_string(const std::string& name) {
  if (name == "single_integrator_2d") return DynamicsKind::kSingleIntegrator2d;
  if (name == "unicycle") return DynamicsKind::kUnicycle;
  if (name == "custom_affine") return DynamicsKind::kCustomAffine;
  throw DomainError("unknown dynamics kind '" + name + "'");
}

Vec eval_dynamics(const RobotSpec& robot, const Vec& state, const Vec& control) {
  if (control.size() != robot.control_dim || !robot.control_box.contains(control)) {
    std::ostringstream msg;
    msg << "control outside control box of robot " << robot.id;
    throw DomainError(msg.str());
  }
  switch (robot.kind) {
    case DynamicsKind::kSingleIntegrator2d:
      return control;
    case DynamicsKind::kUnicycle: {
      // control = (heading, speed)
      Vec v(2);
      v << control[1] * std::cos(control[0]), control[1] * std::sin(control[0]);
      return v;
    }
    case DynamicsKind::kCustomAffine:
      return robot.A * state + robot.B * control + robot.c;
  }
  throw DomainError("unhandled dynamics kind");
}

TeamBounds team_bounds(const Scenario& scenario) {
  TeamBounds b;
  for (const auto& r : scenario.robots) {
    b.m_plus += r.speed_bound * r.speed_bound;
    b.l_plus += r.lipschitz * r.lipschitz;
  }
  b.m_plus = std::sqrt(b.m_plus);
  b.l_plus = std::sqrt(b.l_plus);
  return b;
}

bool in_goal(const Scenario& scenario, std::size_t robot, const Vec& x) {
  return scenario.goals.at(robot).contains(x);
}

bool in_obstacle(const Scenario& scenario, std::size_t robot, const Vec& x) {
  return scenario.obstacles.at(robot).contains(x, 0.0);
}

bool in_free(const Scenario& scenario, std::size_t robot, const Vec& x) {
  if (!scenario.state_boxes.at(robot).contains(x)) return false;
  if (in_obstacle(scenario, robot, x)) return false;
  for (std::size_t j = 0; j < scenario.size(); ++j) {
    if (j == robot) continue;
    if (scenario.goals[j].distance(x) < scenario.sigma - kGeomTol) return false;
  }
  return true;
}

double min_pairwise_distance(const TeamState& state) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.size(); ++i) {
    for (std::size_t j = i + 1; j < state.size(); ++j) {
      best = std::min(best, (state[i] - state[j]).norm());
    }
  }
  return best;
}

bool in_safety(const Scenario& scenario, const TeamState& state) {
  if (state.size() != scenario.size()) throw DomainError("team state size mismatch");
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!in_free(scenario, i, state[i])) return false;
  }
  return min_pairwise_distance(state) >= scenario.sigma - kGeomTol;
}

namespace {

void require(bool ok, const char* invariant, const std::string& detail) {
  if (!ok) throw ValidationError(invariant, detail);
}

std::string robot_tag(const RobotSpec& r) { return "robot " + std::to_string(r.id); }

}  // namespace

void validate_scenario(const Scenario& sc) {
  const std::size_t n = sc.size();
  require(n > 0, "nonempty_team", "scenario has no robots");
  require(sc.state_boxes.size() == n && sc.obstacles.size() == n && sc.goals.size() == n,
          "per_robot_regions", "state_boxes, obstacles and goals must have one entry per robot");
  require(sc.sigma > 0.0, "positive_sigma", "sigma must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = sc.robots[i];
    const std::string tag = robot_tag(r);
    require(r.control_box.dim() == r.control_dim, "control_box_dim", tag);
    require(r.control_dim > 0, "control_box_nonempty", tag);
    for (Eigen::Index k = 0; k < r.control_box.dim(); ++k) {
      require(std::isfinite(r.control_box.lo[k]) && std::isfinite(r.control_box.hi[k]),
              "control_box_bounded", tag);
      require(r.control_box.lo[k] <= r.control_box.hi[k], "control_box_nonempty", tag);
    }
    require(r.speed_bound > 0.0, "speed_bound_positive", tag);
    require(r.lipschitz >= 0.0, "lipschitz_nonnegative", tag);
    require(sc.state_boxes[i].dim() == r.state_dim, "state_box_dim", tag);
    for (Eigen::Index k = 0; k < sc.state_boxes[i].dim(); ++k) {
      require(sc.state_boxes[i].lo[k] <= sc.state_boxes[i].hi[k], "state_box_nonempty", tag);
    }
    switch (r.kind) {
      case DynamicsKind::kSingleIntegrator2d:
        require(r.state_dim == 2 && r.control_dim == 2, "dynamics_dims", tag);
        break;
      case DynamicsKind::kUnicycle:
        require(r.state_dim == 2 && r.control_dim == 2, "dynamics_dims", tag);
        require(r.control_box.lo[1] >= 0.0, "unicycle_speed_nonnegative", tag);
        break;
      case DynamicsKind::kCustomAffine:
        require(r.A.rows() == r.state_dim && r.A.cols() == r.state_dim && r.B.rows() == r.state_dim &&
                    r.B.cols() == r.control_dim && r.c.size() == r.state_dim,
                "dynamics_dims", tag);
        break;
    }
    require(!sc.goals[i].empty(), "goal_nonempty", tag);
    for (const auto& g : sc.goals[i].boxes) {
      require(g.dim() == r.state_dim, "goal_dim", tag);
      for (const auto& o : sc.obstacles[i].boxes) {
        // closed boxes touching on a face still intersect
        require(g.distance(o) > 0.0, "goal_obstacle_disjoint", tag + " goal meets its obstacle");
      }
    }
    if (i > 0) {
      require(r.state_dim == sc.robots[0].state_dim, "shared_workspace",
              "all robots must share one workspace dimension");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (const auto& gi : sc.goals[i].boxes) {
        for (const auto& gj : sc.goals[j].boxes) {
          require(gi.distance(gj) >= sc.sigma - kGeomTol, "goal_separation",
                  robot_tag(sc.robots[i]) + " and " + robot_tag(sc.robots[j]) +
                      " goals closer than sigma");
        }
      }
    }
  }
  if (!sc.start.empty()) {
    require(sc.start.size() == n, "start_size", "start state must list every robot");
    for (std::size_t i = 0; i < n; ++i) {
      require(sc.start[i].size() == sc.robots[i].state_dim, "start_dim", robot_tag(sc.robots[i]));
    }
  }
}

namespace {

// Visits a regular grid over a box, `per_dim` points per axis (one point on degenerate axes).
template <typename F>
void for_each_sample(const Box& box, int per_dim, F&& visit) {
  const auto d = box.dim();
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Vec p(d);
  while (true) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double span = box.hi[k] - box.lo[k];
      const int m = span > 0.0 ? per_dim : 1;
      p[k] = m == 1 ? box.lo[k] : box.lo[k] + span * idx[static_cast<std::size_t>(k)] / (m - 1);
    }
    visit(p);
    Eigen::Index k = 0;
    for (; k < d; ++k) {
      const int m = box.hi[k] > box.lo[k] ? per_dim : 1;
      if (++idx[static_cast<std::size_t>(k)] < m) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
    if (k == d) break;
  }
}

}  // namespace

double sampled_speed(const RobotSpec& robot, const Box& state_box, int per_dim) {
  double best = 0.0;
  for_each_sample(state_box, per_dim, [&](const Vec& x) {
    for_each_sample(robot.control_box, per_dim, [&](const Vec& u) {
      best = std::max(best, eval_dynamics(robot, x, u).norm());
    });
  });
  return best;
}

bool audit_speed_bound(const RobotSpec& robot, const Box& state_box, int per_dim) {
  return sampled_speed(robot, state_box, per_dim) <= robot.speed_bound + 1e-9;
}

}  // namespace pmp

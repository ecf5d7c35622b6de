#pragma once

#include "pmp/core_model.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace pmp::testing {

inline Vec v1(double a) { return Vec::Constant(1, a); }
inline Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
inline Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

inline Box box1(double lo, double hi) { return Box(v1(lo), v1(hi)); }
inline Box box2(double x0, double y0, double x1, double y1) { return Box(v2(x0, y0), v2(x1, y1)); }

/// 1D robot x' = u, u in [-speed, speed].
inline RobotSpec line_robot(int id, double speed) {
  RobotSpec r;
  r.id = id;
  r.kind = DynamicsKind::kCustomAffine;
  r.state_dim = 1;
  r.control_dim = 1;
  r.control_box = box1(-speed, speed);
  r.speed_bound = speed;
  r.A = Mat::Zero(1, 1);
  r.B = Mat::Identity(1, 1);
  r.c = Vec::Zero(1);
  return r;
}

inline RobotSpec unicycle(int id, double theta_lo, double theta_hi, double v_max) {
  RobotSpec r;
  r.id = id;
  r.kind = DynamicsKind::kUnicycle;
  r.control_box = box2(theta_lo, 0.0, theta_hi, v_max);
  r.speed_bound = v_max;
  return r;
}

inline RobotSpec integrator2d(int id, double u_max) {
  RobotSpec r;
  r.id = id;
  r.kind = DynamicsKind::kSingleIntegrator2d;
  r.control_box = box2(-u_max, -u_max, u_max, u_max);
  r.speed_bound = u_max * std::sqrt(2.0);
  return r;
}

/// One robot on [lo, hi] with goal [g_lo, g_hi].
inline Scenario line_scenario(double lo, double hi, double g_lo, double g_hi, double speed = 1.0) {
  Scenario sc;
  sc.name = "line";
  sc.sigma = 0.1;
  sc.robots.push_back(line_robot(0, speed));
  sc.state_boxes.push_back(box1(lo, hi));
  sc.obstacles.push_back({});
  sc.goals.push_back(Region{{box1(g_lo, g_hi)}});
  return sc;
}

/// Two 1D robots sharing a line, goals at opposite ends.
inline Scenario line_pair(double lo, double hi, double sigma, double speed = 1.0) {
  Scenario sc;
  sc.name = "line_pair";
  sc.sigma = sigma;
  for (int i = 0; i < 2; ++i) {
    sc.robots.push_back(line_robot(i, speed));
    sc.state_boxes.push_back(box1(lo, hi));
    sc.obstacles.push_back({});
  }
  sc.goals.push_back(Region{{box1(hi, hi)}});
  sc.goals.push_back(Region{{box1(lo, lo)}});
  return sc;
}

/// Two unicycles on crossing 5-node segments (h = 0.1): robot 0 along x, robot 1 along y.
inline Scenario crossing_pair() {
  Scenario sc;
  sc.name = "crossing_pair";
  sc.sigma = 0.04;
  sc.robots.push_back(unicycle(0, -M_PI, M_PI, 0.2));
  sc.robots.push_back(unicycle(1, -M_PI, M_PI, 0.2));
  sc.state_boxes.push_back(box2(-0.2, 0.0, 0.2, 0.0));
  sc.state_boxes.push_back(box2(0.0, -0.2, 0.0, 0.2));
  sc.obstacles.push_back({});
  sc.obstacles.push_back({});
  sc.goals.push_back(Region{{box2(0.2, 0.0, 0.2, 0.0)}});
  sc.goals.push_back(Region{{box2(0.0, 0.2, 0.0, 0.2)}});
  return sc;
}

inline std::vector<Vec> random_points(std::mt19937_64& rng, std::size_t count, int dim, double lo = 0.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < count; ++k) {
    Vec p(dim);
    for (int i = 0; i < dim; ++i) p[i] = u(rng);
    out.push_back(p);
  }
  return out;
}

}  // namespace pmp::testing

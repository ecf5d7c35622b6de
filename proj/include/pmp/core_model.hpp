#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace pmp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Slack applied to every closed-ball and closed-box membership test so that
/// lattice points sitting exactly on a boundary are not lost to rounding.
inline constexpr double kGeomTol = 1e-9;

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A scenario or configuration broke a named invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string invariant, const std::string& detail)
      : std::runtime_error(invariant + ": " + detail), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// Resolution schedule inconsistent with the discretization requirements.
class ScheduleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Closed axis-aligned box.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_);

  Eigen::Index dim() const { return lo.size(); }
  bool contains(const Vec& p, double tol = kGeomTol) const;
  /// 2-norm distance from p to the box (0 inside).
  double distance(const Vec& p) const;
  /// Distance from an interior point to the nearest face; 0 when outside.
  double depth(const Vec& p) const;
  /// Smallest 2-norm distance between two boxes.
  double distance(const Box& other) const;
};

/// Finite union of boxes. An empty region contains nothing and is infinitely far.
struct Region {
  std::vector<Box> boxes;

  bool empty() const { return boxes.empty(); }
  bool contains(const Vec& p, double tol = kGeomTol) const;
  double distance(const Vec& p) const;
};

enum class DynamicsKind { kSingleIntegrator2d, kUnicycle, kCustomAffine };

const char* to_string(DynamicsKind kind);
DynamicsKind dynamics_kind_from_string(const std::string& name);

struct RobotSpec {
  int id = 0;
  DynamicsKind kind = DynamicsKind::kSingleIntegrator2d;
  Box control_box;
  int state_dim = 2;
  int control_dim = 2;
  double speed_bound = 1.0;  // M_i
  double lipschitz = 0.0;    // l_i
  // custom_affine: f = A x + B u + c
  Mat A;
  Mat B;
  Vec c;
};

/// Velocity f_i(x_i, u_i). Throws DomainError if the control leaves the control box.
Vec eval_dynamics(const RobotSpec& robot, const Vec& state, const Vec& control);

/// Per-robot positions, one vector per robot.
using TeamState = std::vector<Vec>;

struct Scenario {
  std::string name;
  std::vector<RobotSpec> robots;
  std::vector<Box> state_boxes;     // X_i
  std::vector<Region> obstacles;    // X_i^O
  std::vector<Region> goals;        // X_i^G
  double sigma = 0.0;               // inter-robot safety distance
  TeamState start;                  // optional reference start state

  std::size_t size() const { return robots.size(); }
};

struct TeamBounds {
  double m_plus = 0.0;
  double l_plus = 0.0;
};

TeamBounds team_bounds(const Scenario& scenario);

bool in_goal(const Scenario& scenario, std::size_t robot, const Vec& x);
bool in_obstacle(const Scenario& scenario, std::size_t robot, const Vec& x);
/// Membership in X_i^F: inside X_i, outside X_i^O, and at least sigma from every other goal.
bool in_free(const Scenario& scenario, std::size_t robot, const Vec& x);
double min_pairwise_distance(const TeamState& state);
bool in_safety(const Scenario& scenario, const TeamState& state);

/// Enforces the structural invariants (dimensions, compact control sets, M_i > 0,
/// goals clear of obstacles, goal separation). Throws ValidationError naming the
/// violated invariant.
void validate_scenario(const Scenario& scenario);

/// Largest ||f_i|| observed on a regular sample of X_i x U_i with `per_dim` points per axis.
double sampled_speed(const RobotSpec& robot, const Box& state_box, int per_dim);

/// True when the sampled speed never exceeds the declared M_i.
bool audit_speed_bound(const RobotSpec& robot, const Box& state_box, int per_dim = 7);

}  // namespace pmp

#pragma once

#include "pmp/dynamics_discretization.hpp"
#include "pmp/pareto.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace pmp {

/// Node -> ParetoSet table in compressed-row form.
class ValueFunction {
 public:
  ValueFunction() = default;
  explicit ValueFunction(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t size() const { return offsets_.size() - 1; }
  std::size_t count(NodeId x) const { return (offsets_[x + 1] - offsets_[x]) / static_cast<std::size_t>(dim_); }
  const double* points(NodeId x) const { return data_.data() + offsets_[x]; }
  ParetoSet at(NodeId x) const;
  /// Exact equality of the sets stored at x here and at y in `other`.
  bool same(NodeId x, const ValueFunction& other, NodeId y) const;

  void reserve(std::size_t nodes, std::size_t doubles);
  void push_back(const ParetoSet& s);
  void push_back(const double* pts, std::size_t count);
  /// Appends all nodes of `tail` after the nodes already stored.
  void append(const ValueFunction& tail);

  bool operator==(const ValueFunction& o) const {
    return dim_ == o.dim_ && offsets_ == o.offsets_ && data_ == o.data_;
  }
  bool operator!=(const ValueFunction& o) const { return !(*this == o); }

 private:
  int dim_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<double> data_;
};

/// {Delta + tau - Delta∘tau : tau in values}, reduced to its frontier.
ParetoSet combine(const Vec& dt, const ParetoSet& values);

/// Transformed Pareto Bellman update of one node from an explicit successor set.
/// Empty successor set returns v_prev(x).
ParetoSet bellman_update(NodeId x, const SuccessorSet& succ, const Vec& dt, const ValueFunction& v_prev);

/// Same update through the factorized successor cache.
ParetoSet bellman_update(const SuccessorCache& cache, NodeId x, const ValueFunction& v_prev);

struct PolicyEntry {
  std::uint64_t control = 0;    // packed team control, see PolicyTable::decode
  NodeId successor = 0;
  std::uint32_t value_index = 0;  // index of the achieved vector in the node's final frontier
};

/// Controls attaining the last Bellman update, per node.
struct PolicyTable {
  int stage = 0;
  std::vector<std::vector<Vec>> controls;  // [robot][sample]
  std::vector<std::uint64_t> radix;        // samples per robot + 1 (digit 0 = frozen)
  std::vector<std::size_t> offsets{0};
  std::vector<PolicyEntry> entries;

  std::size_t count(NodeId x) const { return offsets[x + 1] - offsets[x]; }
  const PolicyEntry* begin(NodeId x) const { return entries.data() + offsets[x]; }
  /// Per-robot sample index, -1 for a frozen robot.
  std::vector<std::int32_t> decode(std::uint64_t packed) const;
  std::uint64_t encode(const std::vector<std::int32_t>& per_robot) const;
};

/// Policy entries of one node, from explicit successors: every (u, successor, tau) whose
/// combined value is an element of v_new.
std::vector<PolicyEntry> extract_controls(NodeId x, const SuccessorSet& succ, const Vec& dt,
                                          const ValueFunction& v_prev, const ParetoSet& v_new,
                                          const PolicyTable& layout);

enum class StopRule { kBudget, kRelDiff, kFixedPoint };
enum class ExclusionRule {
  kAllProximate,  // skip nodes where every robot is goal-proximate
  kJointBall,     // skip X^G + (M+ eps + h)B, joint 2-norm
};
enum class InitRule { kFullUnion, kRepresentative };
enum class EpsRule { kSqrtH, kSqrtHOverMPlus };

struct StageSpec {
  double h = 0.0;
  double eps = 0.0;
  int budget = -1;  // sweeps; -1 lets schedule_iterations decide
};

struct Schedule {
  std::vector<StageSpec> stages;
  double gamma = 0.5;
  int window = 1;
};

/// Stages h0, h0/2, ... with eps from `rule`.
Schedule dyadic_schedule(double h0, int count, EpsRule rule, double m_plus, double gamma = 0.5, int window = 1);

/// Smallest uniform n per window of `window` consecutive stages with exp(-sum n kappa) <= gamma.
std::vector<int> schedule_iterations(const std::vector<double>& kappas, double gamma, int window);

/// Checks eps > 2h, monotone eps and h/eps, integer nesting ratios and alpha_p >= h_{p-1}.
void validate_schedule(const Schedule& schedule, const Scenario& scenario);

/// [X_i^G + (sigma + M_i eps + h)B] ∩ X_j^F = ∅ on the lattice of `stage`. Throws ValidationError.
void check_goal_standoff(const GridStage& stage);

/// sqrt(sum over nodes of d_H(a(x), b(x))^2)
double value_distance(const ValueFunction& a, const ValueFunction& b, const std::vector<NodeId>& nodes);

/// D(v_{n-1}, v_n) / D(v_0, v_n) <= threshold; false when D(v_0, v_n) = 0.
bool relative_difference_stop(const ValueFunction& v_n, const ValueFunction& v_n_minus_1,
                              const ValueFunction& v_0, const std::vector<NodeId>& nodes, double threshold);

struct PlanOptions {
  DiscretizationOptions discretization;
  bool expand_safety = false;
  bool goal_refine = false;
  StopRule stop = StopRule::kRelDiff;
  double threshold = 0.1;
  int max_sweeps = 1000;  // hard cap for reldiff and fixed-point runs
  ExclusionRule exclusion = ExclusionRule::kAllProximate;
  InitRule init = InitRule::kFullUnion;
  bool zero_init = false;  // v_0 = {0_N} on S^p at every stage
  bool extract_policy = true;
  int workers = 0;  // 0: worker_count()
};

struct StageTimings {
  double successors_s = 0.0;
  double init_s = 0.0;
  double sweeps_s = 0.0;
};

struct StageResult {
  GridStage stage;
  SuccessorCache cache;
  ValueFunction tilde;    // interpolated values
  ValueFunction v0;
  ValueFunction v_prev;   // input of the last update
  ValueFunction v_final;
  PolicyTable policy;
  std::vector<char> updated;  // nodes swept by the Bellman update
  std::vector<char> region;   // goal-refinement stage: nodes the policy covers; empty otherwise
  int sweeps = 0;
  std::size_t dead_ends = 0;
  std::vector<double> convergence;  // D(v_{n-1}, v_n) per sweep
  std::vector<std::string> warnings;
  StageTimings timings;
  bool refinement = false;
};

/// Called with n = 0 for v_0 and after every sweep.
using SweepObserver = std::function<void(const StageResult&, const ValueFunction& v_n, int n)>;

struct PlanResult {
  std::vector<std::unique_ptr<StageResult>> stages;
  const StageResult& final_stage() const;  // last non-refinement stage
};

/// Value function interpolation onto stage p (nested grids). Old nodes copy prev's final
/// values; new safety nodes get the 0/1 goal-proximity vector; the rest {1_N}.
/// `old_mask`, when given, receives the nodes present in the previous stage.
ValueFunction interpolate_value(const StageResult* prev, const GridStage& stage, const NodeSet& safety,
                                std::vector<char>* old_mask = nullptr);
/// v_0: old nodes keep tilde, new nodes take the frontier of tilde over their equivalent nodes.
/// `old_mask` flags nodes present in the previous stage, `first_mask` nodes of the first stage.
ValueFunction initialize_value(const ValueFunction& tilde, const GridStage& stage, const NodeSet& safety,
                               const std::vector<char>& old_mask, const std::vector<char>& first_mask,
                               InitRule rule);

bool excluded(const GridStage& stage, NodeId x, ExclusionRule rule);

/// Jacobi sweeps on a prepared stage (stage, cache, tilde and v0 set).
void run_stage(StageResult& st, int budget, const PlanOptions& options, const SweepObserver& observer = {});

PlanResult plan(const Scenario& scenario, const Schedule& schedule, const PlanOptions& options = {},
                const SweepObserver& observer = {});

/// Nearest member of `set` to `point` (ties to the lowest id), by growing ball queries.
NodeId nearest_in_set(const GridStage& stage, const TeamState& point, const NodeSet& set);

}  // namespace pmp

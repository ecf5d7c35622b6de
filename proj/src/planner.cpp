#include "pmp/planner.hpp"

#include "pmp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace pmp {

// ---------------------------------------------------------------- ValueFunction

ParetoSet ValueFunction::at(NodeId x) const {
  std::vector<double> flat(points(x), points(x) + count(x) * static_cast<std::size_t>(dim_));
  if (flat.empty()) return ParetoSet(dim_);
  return reduce_frontier(std::move(flat), dim_);
}

bool ValueFunction::same(NodeId x, const ValueFunction& other, NodeId y) const {
  const auto n = offsets_[x + 1] - offsets_[x];
  if (n != other.offsets_[y + 1] - other.offsets_[y]) return false;
  return std::equal(points(x), points(x) + n, other.points(y));
}

void ValueFunction::reserve(std::size_t nodes, std::size_t doubles) {
  offsets_.reserve(nodes + 1);
  data_.reserve(doubles);
}

void ValueFunction::push_back(const ParetoSet& s) {
  if (s.dim() != dim_ && !s.empty()) throw DomainError("value dimension mismatch");
  push_back(s.data().data(), s.size());
}

void ValueFunction::push_back(const double* pts, std::size_t count) {
  data_.insert(data_.end(), pts, pts + count * static_cast<std::size_t>(dim_));
  offsets_.push_back(data_.size());
}

void ValueFunction::append(const ValueFunction& tail) {
  const auto base = data_.size();
  data_.insert(data_.end(), tail.data_.begin(), tail.data_.end());
  for (std::size_t k = 1; k < tail.offsets_.size(); ++k) offsets_.push_back(base + tail.offsets_[k]);
}

// ---------------------------------------------------------------- Bellman update

namespace {

inline double combine1(double d, double tau) { return quantize(d + tau - d * tau); }

// Frontier of the combined values from a gathered point buffer.
ParetoSet combine_buffer(const Vec& dt, std::vector<double>&& buf, int dim) {
  ParetoSet reduced = reduce_frontier(std::move(buf), dim);
  std::vector<double> out(reduced.data());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = combine1(dt[static_cast<Eigen::Index>(k % dim)], out[k]);
  return reduce_frontier(std::move(out), dim);
}

}  // namespace

ParetoSet combine(const Vec& dt, const ParetoSet& values) {
  if (values.empty()) throw DomainError("combine: empty value set");
  if (values.dim() != dt.size()) throw DomainError("combine: dimension mismatch");
  return combine_buffer(dt, std::vector<double>(values.data()), values.dim());
}

ParetoSet bellman_update(NodeId x, const SuccessorSet& succ, const Vec& dt, const ValueFunction& v_prev) {
  if (succ.merged.empty()) return v_prev.at(x);
  std::vector<double> buf;
  for (NodeId y : succ.merged) {
    buf.insert(buf.end(), v_prev.points(y), v_prev.points(y) + v_prev.count(y) * static_cast<std::size_t>(v_prev.dim()));
  }
  return combine_buffer(dt, std::move(buf), v_prev.dim());
}

ParetoSet bellman_update(const SuccessorCache& cache, NodeId x, const ValueFunction& v_prev) {
  std::vector<double> buf;
  const auto dim = static_cast<std::size_t>(v_prev.dim());
  cache.for_each_successor(x, [&](NodeId y, const std::uint32_t*) {
    buf.insert(buf.end(), v_prev.points(y), v_prev.points(y) + v_prev.count(y) * dim);
  });
  if (buf.empty()) return v_prev.at(x);
  return combine_buffer(cache.time_increment(x), std::move(buf), v_prev.dim());
}

// ---------------------------------------------------------------- policy

std::vector<std::int32_t> PolicyTable::decode(std::uint64_t packed) const {
  std::vector<std::int32_t> out(radix.size());
  for (std::size_t i = radix.size(); i-- > 0;) {
    out[i] = static_cast<std::int32_t>(packed % radix[i]) - 1;
    packed /= radix[i];
  }
  return out;
}

std::uint64_t PolicyTable::encode(const std::vector<std::int32_t>& per_robot) const {
  std::uint64_t packed = 0;
  for (std::size_t i = 0; i < radix.size(); ++i) packed = packed * radix[i] + static_cast<std::uint64_t>(per_robot[i] + 1);
  return packed;
}

namespace {

bool entry_less(const PolicyEntry& a, const PolicyEntry& b) {
  if (a.successor != b.successor) return a.successor < b.successor;
  if (a.control != b.control) return a.control < b.control;
  return a.value_index < b.value_index;
}

// Index of the combined vector in `front`, or -1.
long match(const Vec& dt, const double* tau, const ParetoSet& front, std::vector<double>& scratch) {
  const int d = front.dim();
  scratch.resize(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) scratch[static_cast<std::size_t>(k)] = combine1(dt[k], tau[k]);
  for (std::size_t j = 0; j < front.size(); ++j) {
    if (std::equal(scratch.begin(), scratch.end(), front.point(j))) return static_cast<long>(j);
  }
  return -1;
}

PolicyTable empty_policy(const SuccessorCache& cache, int stage) {
  PolicyTable t;
  t.stage = stage;
  t.controls = cache.controls;
  for (const auto& c : cache.controls) t.radix.push_back(c.size() + 1);
  return t;
}

std::vector<PolicyEntry> extract_cached(const SuccessorCache& cache, const PolicyTable& layout, NodeId x,
                                        const ValueFunction& v_prev, const ParetoSet& v_new) {
  std::vector<PolicyEntry> out;
  const Vec dt = cache.time_increment(x);
  const std::size_t n = cache.stage->robots();
  const auto dim = static_cast<std::size_t>(v_prev.dim());
  std::vector<std::size_t> locals(n);
  for (std::size_t i = 0; i < n; ++i) locals[i] = cache.stage->local(x, i);
  std::vector<double> scratch;
  std::vector<std::int32_t> team(n);
  cache.for_each_successor(x, [&](NodeId y, const std::uint32_t* pick) {
    for (std::size_t k = 0; k < v_prev.count(y); ++k) {
      const long j = match(dt, v_prev.points(y) + k * dim, v_new, scratch);
      if (j < 0) continue;
      // product of the per-robot credited controls
      std::vector<std::size_t> idx(n, 0);
      while (true) {
        for (std::size_t i = 0; i < n; ++i) {
          const auto& ctl = cache.robots[i][locals[i]][pick[i]].controls;
          team[i] = ctl.empty() ? -1 : ctl[idx[i]];
        }
        out.push_back(PolicyEntry{layout.encode(team), y, static_cast<std::uint32_t>(j)});
        std::size_t i = n;
        while (i-- > 0) {
          const auto m = std::max<std::size_t>(1, cache.robots[i][locals[i]][pick[i]].controls.size());
          if (++idx[i] < m) break;
          idx[i] = 0;
        }
        if (i == static_cast<std::size_t>(-1)) break;
      }
    }
  });
  std::sort(out.begin(), out.end(), entry_less);
  out.erase(std::unique(out.begin(), out.end(),
                        [](const PolicyEntry& a, const PolicyEntry& b) {
                          return a.successor == b.successor && a.control == b.control && a.value_index == b.value_index;
                        }),
            out.end());
  return out;
}

}  // namespace

std::vector<PolicyEntry> extract_controls(NodeId, const SuccessorSet& succ, const Vec& dt,
                                          const ValueFunction& v_prev, const ParetoSet& v_new,
                                          const PolicyTable& layout) {
  std::vector<PolicyEntry> out;
  std::vector<double> scratch;
  const auto dim = static_cast<std::size_t>(v_prev.dim());
  for (const auto& s : succ.samples) {
    const auto packed = layout.encode(s.control);
    for (NodeId y : s.successors) {
      for (std::size_t k = 0; k < v_prev.count(y); ++k) {
        const long j = match(dt, v_prev.points(y) + k * dim, v_new, scratch);
        if (j >= 0) out.push_back(PolicyEntry{packed, y, static_cast<std::uint32_t>(j)});
      }
    }
  }
  std::sort(out.begin(), out.end(), entry_less);
  out.erase(std::unique(out.begin(), out.end(),
                        [](const PolicyEntry& a, const PolicyEntry& b) {
                          return a.successor == b.successor && a.control == b.control && a.value_index == b.value_index;
                        }),
            out.end());
  return out;
}

// ---------------------------------------------------------------- schedule

Schedule dyadic_schedule(double h0, int count, EpsRule rule, double m_plus, double gamma, int window) {
  if (!(h0 > 0.0) || count < 1) throw ScheduleError("dyadic schedule needs h0 > 0 and at least one stage");
  Schedule s;
  s.gamma = gamma;
  s.window = window;
  double h = h0;
  for (int p = 0; p < count; ++p, h /= 2.0) {
    const double eps = rule == EpsRule::kSqrtH ? std::sqrt(h) : std::sqrt(h / m_plus);
    s.stages.push_back(StageSpec{h, eps, -1});
  }
  return s;
}

std::vector<int> schedule_iterations(const std::vector<double>& kappas, double gamma, int window) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ScheduleError("gamma must lie in (0,1)");
  if (window < 1) throw ScheduleError("window must hold at least one stage");
  std::vector<int> n(kappas.size(), 0);
  const double need = std::log(1.0 / gamma);
  for (std::size_t b = 0; b < kappas.size(); b += static_cast<std::size_t>(window)) {
    const std::size_t e = std::min(kappas.size(), b + static_cast<std::size_t>(window));
    double sum = 0.0;
    for (std::size_t p = b; p < e; ++p) {
      if (!(kappas[p] > 0.0)) throw ScheduleError("kappa must be positive");
      sum += kappas[p];
    }
    int m = static_cast<int>(std::ceil(need / sum - 1e-12));
    m = std::max(m, 1);
    while (std::exp(-m * sum) > gamma) ++m;
    for (std::size_t p = b; p < e; ++p) n[p] = m;
  }
  return n;
}

void validate_schedule(const Schedule& s, const Scenario& scenario) {
  if (s.stages.empty()) throw ScheduleError("schedule has no stages");
  const auto bounds = team_bounds(scenario);
  for (std::size_t p = 0; p < s.stages.size(); ++p) {
    const auto& st = s.stages[p];
    if (!(st.h > 0.0)) throw ScheduleError("stage " + std::to_string(p + 1) + ": h must be positive");
    if (!(st.eps > 2.0 * st.h)) {
      throw ScheduleError("stage " + std::to_string(p + 1) + ": eps must exceed 2h");
    }
    if (p == 0) continue;
    const auto& pr = s.stages[p - 1];
    if (st.eps > pr.eps + 1e-12 || st.h / st.eps > pr.h / pr.eps + 1e-12) {
      throw ScheduleError("stage " + std::to_string(p + 1) + ": eps and h/eps must not increase");
    }
    const double ratio = pr.h / st.h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1.0) {
      throw ScheduleError("stage " + std::to_string(p + 1) + ": grids are not nested");
    }
    if (alpha(st.h, st.eps, bounds.l_plus, bounds.m_plus) < pr.h - 1e-12) {
      throw ScheduleError("stage " + std::to_string(p + 1) + ": alpha_p must be at least h_{p-1}");
    }
  }
}

void check_goal_standoff(const GridStage& stage) {
  const auto& sc = *stage.scenario;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    const double r = sc.sigma + stage.proximity_radius(i);
    for (std::size_t j = 0; j < sc.size(); ++j) {
      if (i == j) continue;
      for (const auto& y : stage.coords[j]) {
        if (in_free(sc, j, y) && sc.goals[i].distance(y) <= r) {
          std::ostringstream msg;
          msg << "free node of robot " << sc.robots[j].id << " lies within sigma + M eps + h of the goal of robot "
              << sc.robots[i].id;
          throw ValidationError("goal_standoff", msg.str());
        }
      }
    }
  }
}

// ---------------------------------------------------------------- stopping

double value_distance(const ValueFunction& a, const ValueFunction& b, const std::vector<NodeId>& nodes) {
  double acc = 0.0;
  for (NodeId x : nodes) {
    if (a.same(x, b, x)) continue;
    const double h = hausdorff(a.at(x), b.at(x));
    acc += h * h;
  }
  return std::sqrt(acc);
}

bool relative_difference_stop(const ValueFunction& v_n, const ValueFunction& v_n_minus_1,
                              const ValueFunction& v_0, const std::vector<NodeId>& nodes, double threshold) {
  const double total = value_distance(v_0, v_n, nodes);
  if (total == 0.0) return false;
  return value_distance(v_n_minus_1, v_n, nodes) / total <= threshold;
}

// ---------------------------------------------------------------- initialization

namespace {

ParetoSet proximity_vector(const GridStage& stage, NodeId x) {
  Vec v(static_cast<Eigen::Index>(stage.robots()));
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    v[static_cast<Eigen::Index>(i)] = stage.goal_proximate[i][stage.local(x, i)] ? 0.0 : 1.0;
  }
  return ParetoSet::singleton(v);
}

}  // namespace

ValueFunction interpolate_value(const StageResult* prev, const GridStage& stage, const NodeSet& safety,
                                std::vector<char>* old_mask) {
  const int dim = static_cast<int>(stage.robots());
  std::vector<std::int64_t> coarse_of(stage.node_count, -1);
  if (prev != nullptr) {
    const auto map = nesting_map(prev->stage, stage);
    for (NodeId c = 0; c < map.size(); ++c) coarse_of[map[c]] = static_cast<std::int64_t>(c);
  }
  if (old_mask != nullptr) {
    old_mask->assign(stage.node_count, 0);
    for (NodeId x = 0; x < stage.node_count; ++x) (*old_mask)[x] = coarse_of[x] >= 0;
  }
  const ParetoSet ones = ParetoSet::constant(dim, 1.0);
  ValueFunction out(dim);
  out.reserve(stage.node_count, stage.node_count * static_cast<std::size_t>(dim));
  for (NodeId x = 0; x < stage.node_count; ++x) {
    if (coarse_of[x] >= 0) {
      const auto c = static_cast<NodeId>(coarse_of[x]);
      out.push_back(prev->v_final.points(c), prev->v_final.count(c));
    } else if (safety.contains(x)) {
      out.push_back(proximity_vector(stage, x));
    } else {
      out.push_back(ones);
    }
  }
  return out;
}

ValueFunction initialize_value(const ValueFunction& tilde, const GridStage& stage, const NodeSet& safety,
                               const std::vector<char>& old_mask, const std::vector<char>& first_mask,
                               InitRule rule) {
  const int dim = tilde.dim();
  const std::size_t n = stage.robots();
  // class key: non-proximate robots' coordinates, proximate robots replaced by a sentinel
  auto key_of = [&](NodeId x) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto l = stage.local(x, i);
      const auto size = static_cast<std::uint64_t>(stage.lattices[i].size) + 1;
      key = key * size + (stage.goal_proximate[i][l] ? size - 1 : static_cast<std::uint64_t>(l));
    }
    return key;
  };
  std::unordered_map<std::uint64_t, ParetoSet> classes;
  auto class_value = [&](NodeId x) -> const ParetoSet& {
    const auto key = key_of(x);
    auto it = classes.find(key);
    if (it != classes.end()) return it->second;
    const auto members = equivalent_nodes(stage, x);
    std::vector<NodeId> pool;
    if (rule == InitRule::kRepresentative) {
      for (NodeId m : members) {
        if (first_mask[m] && safety.contains(m)) { pool.push_back(m); break; }
      }
      if (pool.empty()) {
        for (NodeId m : members) {
          if (first_mask[m]) { pool.push_back(m); break; }
        }
      }
    }
    if (pool.empty()) pool = members;
    std::vector<double> buf;
    for (NodeId m : pool) {
      buf.insert(buf.end(), tilde.points(m), tilde.points(m) + tilde.count(m) * static_cast<std::size_t>(dim));
    }
    return classes.emplace(key, reduce_frontier(std::move(buf), dim)).first->second;
  };
  ValueFunction out(dim);
  for (NodeId x = 0; x < stage.node_count; ++x) {
    if (old_mask[x]) {
      out.push_back(tilde.points(x), tilde.count(x));
    } else {
      out.push_back(class_value(x));
    }
  }
  return out;
}

bool excluded(const GridStage& stage, NodeId x, ExclusionRule rule) {
  if (rule == ExclusionRule::kAllProximate) return all_goal_proximate(stage, x);
  const auto& sc = *stage.scenario;
  double acc = 0.0;
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    const double d = sc.goals[i].distance(stage.coords[i][stage.local(x, i)]);
    acc += d * d;
  }
  return std::sqrt(acc) <= team_bounds(sc).m_plus * stage.eps + stage.h + kGeomTol;
}

// ---------------------------------------------------------------- sweeps

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ValueFunction sweep(const StageResult& st, const ValueFunction& v_prev, int workers) {
  const NodeId total = st.stage.node_count;
  const int dim = v_prev.dim();
  std::vector<ValueFunction> parts(static_cast<std::size_t>(std::max(1, workers)), ValueFunction(dim));
  parallel_chunks(total, workers, [&](std::size_t b, std::size_t e, int c) {
    auto& part = parts[static_cast<std::size_t>(c)];
    std::vector<double> buf;
    for (NodeId x = b; x < e; ++x) {
      if (!st.updated[x]) {
        part.push_back(v_prev.points(x), v_prev.count(x));
        continue;
      }
      buf.clear();
      st.cache.for_each_successor(x, [&](NodeId y, const std::uint32_t*) {
        buf.insert(buf.end(), v_prev.points(y), v_prev.points(y) + v_prev.count(y) * static_cast<std::size_t>(dim));
      });
      if (buf.empty()) {
        part.push_back(v_prev.points(x), v_prev.count(x));
      } else {
        part.push_back(combine_buffer(st.cache.time_increment(x), std::move(buf), dim));
      }
    }
  });
  ValueFunction out(dim);
  for (const auto& p : parts) out.append(p);
  return out;
}

}  // namespace

void run_stage(StageResult& st, int budget, const PlanOptions& options, const SweepObserver& observer) {
  const auto t0 = Clock::now();
  const int workers = options.workers > 0 ? options.workers : worker_count();
  const auto& safety = st.cache.safety;
  st.updated.assign(st.stage.node_count, 0);
  st.dead_ends = 0;
  for (NodeId x : safety.list) {
    if (excluded(st.stage, x, options.exclusion)) continue;
    if (!st.region.empty() && !st.region[x]) continue;
    st.updated[x] = 1;
    bool any = false;
    st.cache.for_each_successor(x, [&](NodeId, const std::uint32_t*) { any = true; });
    if (!any) ++st.dead_ends;
  }
  if (observer) observer(st, st.v0, 0);

  ValueFunction cur = st.v0;
  st.v_prev = st.v0;
  st.sweeps = 0;
  st.convergence.clear();
  bool reached_fixed = false;
  if (budget <= 0) st.warnings.push_back("iteration budget is 0: stage returns its initialization and an empty policy");
  while (st.sweeps < budget) {
    ValueFunction next = sweep(st, cur, workers);
    ++st.sweeps;
    const bool fixed = next == cur;
    const double step = value_distance(cur, next, safety.list);
    st.convergence.push_back(step);
    if (observer) observer(st, next, st.sweeps);
    st.v_prev = std::move(cur);
    cur = std::move(next);
    if (fixed) {
      reached_fixed = true;
      break;
    }
    if (options.stop == StopRule::kRelDiff) {
      const double total = value_distance(st.v0, cur, safety.list);
      if (total > 0.0 && step / total <= options.threshold) break;
    }
  }
  if (!reached_fixed && options.stop == StopRule::kFixedPoint) {
    st.warnings.push_back("sweep cap reached before the fixed point");
  }

  // nodes the update never touches carry the interpolated value
  ValueFunction fin(cur.dim());
  for (NodeId x = 0; x < st.stage.node_count; ++x) {
    if (st.updated[x]) fin.push_back(cur.points(x), cur.count(x));
    else fin.push_back(st.tilde.points(x), st.tilde.count(x));
  }
  st.v_final = std::move(fin);

  st.policy = empty_policy(st.cache, st.stage.index);
  st.policy.offsets.assign(1, 0);
  if (options.extract_policy && st.sweeps > 0) {
    for (NodeId x = 0; x < st.stage.node_count; ++x) {
      if (st.updated[x]) {
        auto e = extract_cached(st.cache, st.policy, x, st.v_prev, st.v_final.at(x));
        st.policy.entries.insert(st.policy.entries.end(), e.begin(), e.end());
      }
      st.policy.offsets.push_back(st.policy.entries.size());
    }
  } else {
    st.policy.offsets.assign(st.stage.node_count + 1, 0);
  }
  st.timings.sweeps_s = seconds_since(t0);
}

// ---------------------------------------------------------------- plan

const StageResult& PlanResult::final_stage() const {
  for (auto it = stages.rbegin(); it != stages.rend(); ++it) {
    if (!(*it)->refinement) return **it;
  }
  throw LookupError("plan has no stages");
}

namespace {

std::unique_ptr<StageResult> prepare_stage(const Scenario& scenario, double h, double eps, int index,
                                           const PlanOptions& options) {
  auto st = std::make_unique<StageResult>();
  st->stage = build_stage(scenario, h, eps, index);
  const auto t0 = Clock::now();
  const NodeSet safety = safety_nodes(st->stage, options.expand_safety);
  st->cache = build_successor_cache(st->stage, safety, options.discretization);
  st->timings.successors_s = seconds_since(t0);
  return st;
}

void initialize_stage(StageResult& st, const StageResult* prev, std::vector<char>& first_mask,
                      const PlanOptions& options) {
  const auto t0 = Clock::now();
  const auto& safety = st.cache.safety;
  std::vector<char> old_mask;
  st.tilde = interpolate_value(prev, st.stage, safety, &old_mask);
  if (prev == nullptr) {
    first_mask.assign(st.stage.node_count, 1);
  } else {
    std::vector<char> next(st.stage.node_count, 0);
    const auto map = nesting_map(prev->stage, st.stage);
    for (NodeId c = 0; c < map.size(); ++c) next[map[c]] = first_mask[c];
    first_mask = std::move(next);
  }
  if (options.zero_init) {
    const int dim = static_cast<int>(st.stage.robots());
    const auto zeros = ParetoSet::constant(dim, 0.0);
    const auto ones = ParetoSet::constant(dim, 1.0);
    ValueFunction v(dim);
    for (NodeId x = 0; x < st.stage.node_count; ++x) v.push_back(safety.contains(x) ? zeros : ones);
    st.tilde = v;
    st.v0 = std::move(v);
  } else {
    st.v0 = initialize_value(st.tilde, st.stage, safety, old_mask, first_mask, options.init);
  }
  st.timings.init_s = seconds_since(t0);
}

}  // namespace

PlanResult plan(const Scenario& scenario, const Schedule& schedule, const PlanOptions& options,
                const SweepObserver& observer) {
  validate_scenario(scenario);
  validate_schedule(schedule, scenario);

  std::vector<int> budgets(schedule.stages.size(), options.max_sweeps);
  if (options.stop == StopRule::kBudget) {
    std::vector<double> kappas;
    for (const auto& s : schedule.stages) kappas.push_back(kappa(s.h, s.eps));
    const auto auto_n = schedule_iterations(kappas, schedule.gamma, schedule.window);
    for (std::size_t p = 0; p < budgets.size(); ++p) {
      budgets[p] = schedule.stages[p].budget >= 0 ? schedule.stages[p].budget : auto_n[p];
    }
  }

  PlanResult result;
  std::vector<char> first_mask;
  for (std::size_t p = 0; p < schedule.stages.size(); ++p) {
    const auto& spec = schedule.stages[p];
    auto st = prepare_stage(scenario, spec.h, spec.eps, static_cast<int>(p), options);
    if (p == 0) check_goal_standoff(st->stage);
    const StageResult* prev = p == 0 ? nullptr : result.stages.back().get();
    initialize_stage(*st, prev, first_mask, options);
    run_stage(*st, budgets[p], options, observer);
    result.stages.push_back(std::move(st));
  }

  if (options.goal_refine) {
    const StageResult& last = *result.stages.back();
    const double h = last.stage.h / 2.0;
    const double eps = last.stage.eps / std::sqrt(2.0);
    auto st = prepare_stage(scenario, h, eps, static_cast<int>(schedule.stages.size()), options);
    st->refinement = true;
    initialize_stage(*st, &last, first_mask, options);
    // one-hop goal expansion of the previous stage: some robot within M_i eps + h of its goal
    st->region.assign(st->stage.node_count, 0);
    for (NodeId x = 0; x < st->stage.node_count; ++x) {
      for (std::size_t i = 0; i < st->stage.robots(); ++i) {
        const auto& xi = st->stage.coords[i][st->stage.local(x, i)];
        if (scenario.goals[i].distance(xi) <= last.stage.proximity_radius(i) + kGeomTol) {
          st->region[x] = 1;
          break;
        }
      }
    }
    run_stage(*st, options.stop == StopRule::kBudget ? budgets.back() : options.max_sweeps, options, observer);
    result.stages.push_back(std::move(st));
  }
  return result;
}

NodeId nearest_in_set(const GridStage& stage, const TeamState& point, const NodeSet& set) {
  if (set.list.empty()) throw LookupError("nearest_in_set: empty set");
  double r = stage.h;
  double diameter = 0.0;
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    const auto& lat = stage.lattices[i];
    double acc = 0.0;
    for (int k = 0; k < lat.dim(); ++k) {
      const double span = static_cast<double>(lat.count[static_cast<std::size_t>(k)]) * stage.h;
      acc += span * span;
    }
    diameter += acc;
  }
  diameter = std::sqrt(diameter);
  double far = 0.0;
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    far += (point[i] - stage.coords[i][stage.lattices[i].nearest(point[i])]).squaredNorm();
  }
  far = std::sqrt(far);
  while (r <= 2.0 * (diameter + far) + stage.h) {
    std::vector<NodeId> cand;
    for (NodeId id : nodes_within(stage, point, r)) {
      if (set.contains(id)) cand.push_back(id);
    }
    if (!cand.empty()) {
      const NodeId best = nearest_node(stage, point, cand);
      if (std::sqrt(stage.dist2(best, point)) <= r) return best;
    }
    r *= 2.0;
  }
  return nearest_node(stage, point, set.list);
}

}  // namespace pmp

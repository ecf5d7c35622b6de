#include "pmp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace pmp {

std::vector<std::int64_t> RobotLattice::indices(std::size_t local) const {
  std::vector<std::int64_t> idx(first.size());
  for (std::size_t k = 0; k < first.size(); ++k) {
    const auto c = static_cast<std::size_t>(count[k]);
    idx[k] = first[k] + static_cast<std::int64_t>(local % c);
    local /= c;
  }
  return idx;
}

std::int64_t RobotLattice::local_of(const std::vector<std::int64_t>& idx) const {
  std::int64_t local = 0;
  std::int64_t scale = 1;
  for (std::size_t k = 0; k < first.size(); ++k) {
    const auto off = idx[k] - first[k];
    if (off < 0 || off >= count[k]) return -1;
    local += off * scale;
    scale *= count[k];
  }
  return local;
}

Vec RobotLattice::coord(std::size_t local) const {
  const auto idx = indices(local);
  Vec p(dim());
  for (int k = 0; k < dim(); ++k) p[k] = static_cast<double>(idx[static_cast<std::size_t>(k)]) * h;
  return p;
}

std::vector<std::size_t> RobotLattice::within(const Vec& center, double radius) const {
  std::vector<std::size_t> out;
  if (radius < 0.0) return out;
  const int d = dim();
  std::vector<std::int64_t> lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    lo[uk] = std::max(first[uk], static_cast<std::int64_t>(std::ceil((center[k] - radius) / h - 1e-9)));
    hi[uk] = std::min(first[uk] + count[uk] - 1,
                      static_cast<std::int64_t>(std::floor((center[k] + radius) / h + 1e-9)));
    if (lo[uk] > hi[uk]) return out;
  }
  const double r2 = (radius + kGeomTol) * (radius + kGeomTol);
  std::vector<std::int64_t> idx = lo;
  while (true) {
    double acc = 0.0;
    for (int k = 0; k < d; ++k) {
      const double diff = static_cast<double>(idx[static_cast<std::size_t>(k)]) * h - center[k];
      acc += diff * diff;
    }
    if (acc <= r2) out.push_back(static_cast<std::size_t>(local_of(idx)));
    int k = 0;
    for (; k < d; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      if (++idx[uk] <= hi[uk]) break;
      idx[uk] = lo[uk];
    }
    if (k == d) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t RobotLattice::nearest(const Vec& p) const {
  std::vector<std::int64_t> idx(first.size());
  for (std::size_t k = 0; k < first.size(); ++k) {
    const auto r = static_cast<std::int64_t>(std::llround(p[static_cast<Eigen::Index>(k)] / h));
    idx[k] = std::clamp(r, first[k], first[k] + count[k] - 1);
  }
  return static_cast<std::size_t>(local_of(idx));
}

RobotLattice build_lattice(const Box& box, double h) {
  if (!(h > 0.0)) throw ScheduleError("lattice spacing must be positive");
  RobotLattice lat;
  lat.h = h;
  lat.size = 1;
  for (Eigen::Index k = 0; k < box.dim(); ++k) {
    const auto lo = static_cast<std::int64_t>(std::ceil(box.lo[k] / h - 1e-9));
    const auto hi = static_cast<std::int64_t>(std::floor(box.hi[k] / h + 1e-9));
    if (hi < lo) throw ScheduleError("state box axis holds no lattice node at this resolution");
    lat.first.push_back(lo);
    lat.count.push_back(hi - lo + 1);
    lat.size *= static_cast<std::size_t>(hi - lo + 1);
  }
  return lat;
}

std::vector<std::size_t> GridStage::decode(NodeId id) const {
  std::vector<std::size_t> locals(robots());
  for (std::size_t i = 0; i < robots(); ++i) locals[i] = local(id, i);
  return locals;
}

NodeId GridStage::encode(const std::vector<std::size_t>& locals) const {
  NodeId id = 0;
  for (std::size_t i = 0; i < robots(); ++i) id += static_cast<NodeId>(locals[i]) * stride[i];
  return id;
}

TeamState GridStage::state(NodeId id) const {
  TeamState s(robots());
  for (std::size_t i = 0; i < robots(); ++i) s[i] = coords[i][local(id, i)];
  return s;
}

double GridStage::dist2(NodeId id, const TeamState& p) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < robots(); ++i) acc += (coords[i][local(id, i)] - p[i]).squaredNorm();
  return acc;
}

double GridStage::proximity_radius(std::size_t robot) const {
  return scenario->robots[robot].speed_bound * eps + h;
}

GridStage build_stage(const Scenario& scenario, double h, double eps, int index) {
  if (!(eps > 2.0 * h)) throw ScheduleError("temporal resolution must exceed twice the spatial resolution");
  GridStage st;
  st.index = index;
  st.h = h;
  st.eps = eps;
  st.scenario = std::make_shared<const Scenario>(scenario);
  const std::size_t n = scenario.size();
  st.stride.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    st.lattices.push_back(build_lattice(scenario.state_boxes[i], h));
    const auto& lat = st.lattices.back();
    std::vector<Vec> cs(lat.size);
    std::vector<char> prox(lat.size);
    const double radius = scenario.robots[i].speed_bound * eps + h;
    for (std::size_t l = 0; l < lat.size; ++l) {
      cs[l] = lat.coord(l);
      prox[l] = scenario.goals[i].distance(cs[l]) <= radius + kGeomTol;
    }
    st.coords.push_back(std::move(cs));
    st.goal_proximate.push_back(std::move(prox));
  }
  NodeId count = 1;
  for (std::size_t i = n; i-- > 0;) {
    st.stride[i] = count;
    const auto sz = static_cast<NodeId>(st.lattices[i].size);
    if (count > std::numeric_limits<NodeId>::max() / sz) throw ScheduleError("joint node count overflows");
    count *= sz;
  }
  st.node_count = count;
  return st;
}

namespace {

// Approximate distance from x_i to X_i^F: depth inside obstacles and shortfall of the goal standoff.
double free_violation(const Scenario& sc, std::size_t i, const Vec& x) {
  double v = 0.0;
  for (const auto& b : sc.obstacles[i].boxes) {
    if (b.contains(x, 0.0)) v = std::max(v, b.depth(x));
  }
  for (std::size_t j = 0; j < sc.size(); ++j) {
    if (j != i) v = std::max(v, sc.sigma - sc.goals[j].distance(x));
  }
  return std::max(v, 0.0);
}

}  // namespace

NodeSet safety_nodes(const GridStage& stage, bool expand) {
  const auto& sc = *stage.scenario;
  const std::size_t n = stage.robots();
  NodeSet out;
  out.mask.assign(stage.node_count, 0);

  std::vector<std::vector<double>> viol(n);
  for (std::size_t i = 0; i < n; ++i) {
    viol[i].resize(stage.lattices[i].size);
    for (std::size_t l = 0; l < viol[i].size(); ++l) {
      const auto& x = stage.coords[i][l];
      viol[i][l] = in_free(sc, i, x) ? 0.0 : std::max(free_violation(sc, i, x), kGeomTol);
    }
  }
  const double sigma = sc.sigma;
  const double h2 = stage.h * stage.h;
  std::vector<std::size_t> locals(n);
  for (NodeId id = 0; id < stage.node_count; ++id) {
    double acc = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      locals[i] = stage.local(id, i);
      const double v = viol[i][locals[i]];
      if (v > 0.0) {
        if (!expand) { ok = false; break; }
        acc += v * v;
      }
    }
    if (!ok) continue;
    for (std::size_t i = 0; i < n && ok; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = (stage.coords[i][locals[i]] - stage.coords[j][locals[j]]).norm();
        if (d < sigma - kGeomTol) {
          if (!expand) { ok = false; break; }
          // moving both robots apart symmetrically
          acc += (sigma - d) * (sigma - d) / 2.0;
        }
      }
    }
    if (ok && (!expand || acc <= h2 + kGeomTol)) {
      out.mask[id] = 1;
      out.list.push_back(id);
    }
  }
  return out;
}

std::vector<std::size_t> goal_proximity_set(const GridStage& stage, NodeId x) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    if (stage.goal_proximate[i][stage.local(x, i)]) out.push_back(i);
  }
  return out;
}

bool all_goal_proximate(const GridStage& stage, NodeId x) {
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    if (!stage.goal_proximate[i][stage.local(x, i)]) return false;
  }
  return true;
}

std::vector<NodeId> equivalent_nodes(const GridStage& stage, NodeId x) {
  const std::size_t n = stage.robots();
  std::vector<std::vector<std::size_t>> options(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = stage.local(x, i);
    if (stage.goal_proximate[i][l]) {
      for (std::size_t k = 0; k < stage.lattices[i].size; ++k) {
        if (stage.goal_proximate[i][k]) options[i].push_back(k);
      }
    } else {
      options[i].push_back(l);
    }
  }
  std::vector<NodeId> out;
  std::function<void(std::size_t, NodeId)> rec = [&](std::size_t i, NodeId acc) {
    if (i == n) {
      out.push_back(acc);
      return;
    }
    for (auto l : options[i]) rec(i + 1, acc + static_cast<NodeId>(l) * stage.stride[i]);
  };
  rec(0, 0);
  return out;  // robot 0 most significant and options ascending, so already sorted
}

std::vector<NodeId> nodes_within(const GridStage& stage, const TeamState& center, double radius) {
  const std::size_t n = stage.robots();
  std::vector<std::vector<std::pair<std::size_t, double>>> cand(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto l : stage.lattices[i].within(center[i], radius)) {
      cand[i].emplace_back(l, (stage.coords[i][l] - center[i]).squaredNorm());
    }
  }
  const double r2 = (radius + kGeomTol) * (radius + kGeomTol);
  std::vector<NodeId> out;
  std::function<void(std::size_t, NodeId, double)> rec = [&](std::size_t i, NodeId acc, double d2) {
    if (i == n) {
      out.push_back(acc);
      return;
    }
    for (const auto& [l, dl] : cand[i]) {
      if (d2 + dl <= r2) rec(i + 1, acc + static_cast<NodeId>(l) * stage.stride[i], d2 + dl);
    }
  };
  rec(0, 0, 0.0);
  return out;
}

NodeId nearest_node(const GridStage& stage, const TeamState& point, const std::vector<NodeId>& restrict) {
  if (restrict.empty()) throw LookupError("nearest_node: empty restriction set");
  NodeId best = restrict.front();
  double best_d = stage.dist2(best, point);
  for (std::size_t k = 1; k < restrict.size(); ++k) {
    const NodeId id = restrict[k];
    const double d = stage.dist2(id, point);
    if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && id < best)) {
      best = id;
      best_d = std::min(d, best_d);
    }
  }
  return best;
}

std::vector<NodeId> nesting_map(const GridStage& coarse, const GridStage& fine) {
  const std::size_t n = coarse.robots();
  if (fine.robots() != n) throw ScheduleError("stages disagree on team size");
  const double ratio = coarse.h / fine.h;
  const auto r = static_cast<std::int64_t>(std::llround(ratio));
  if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9) {
    throw ScheduleError("grids are not nested: spacing ratio is not an integer");
  }
  std::vector<std::vector<std::size_t>> per_robot(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cl = coarse.lattices[i];
    per_robot[i].resize(cl.size);
    for (std::size_t l = 0; l < cl.size; ++l) {
      auto idx = cl.indices(l);
      for (auto& v : idx) v *= r;
      const auto f = fine.lattices[i].local_of(idx);
      if (f < 0) throw ScheduleError("grids are not nested: coarse node missing from fine lattice");
      per_robot[i][l] = static_cast<std::size_t>(f);
    }
  }
  std::vector<NodeId> out(coarse.node_count);
  for (NodeId id = 0; id < coarse.node_count; ++id) {
    NodeId f = 0;
    for (std::size_t i = 0; i < n; ++i) f += static_cast<NodeId>(per_robot[i][coarse.local(id, i)]) * fine.stride[i];
    out[id] = f;
  }
  return out;
}

}  // namespace pmp

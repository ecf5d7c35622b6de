#include "pmp/viability_oracle.hpp"

#include "pmp/dynamics_discretization.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace pmp {

namespace {

constexpr double kTol = 1e-9;

// Convex hull of a planar or linear point cloud.
struct Hull {
  int dim = 0;
  double lo = 0.0, hi = 0.0;  // dim 1
  std::vector<Vec> poly;      // dim 2, counter-clockwise, no repeated vertex
};

double cross(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Hull make_hull(const std::vector<Vec>& points) {
  if (points.empty()) throw DomainError("hull of an empty point set");
  Hull h;
  h.dim = static_cast<int>(points.front().size());
  if (h.dim == 1) {
    h.lo = h.hi = points.front()[0];
    for (const auto& p : points) {
      h.lo = std::min(h.lo, p[0]);
      h.hi = std::max(h.hi, p[0]);
    }
    return h;
  }
  if (h.dim != 2) throw DomainError("convex hull supports 1 or 2 dimensions");
  std::vector<Vec> pts = points;
  std::sort(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) {
    return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Vec& a, const Vec& b) { return (a - b).norm() < 1e-15; }),
            pts.end());
  if (pts.size() < 3) {
    h.poly = pts;
    return h;
  }
  std::vector<Vec> out(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(out[k - 2], out[k - 1], p) <= 0) --k;
    out[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(out[k - 2], out[k - 1], pts[i]) <= 0) --k;
    out[k++] = pts[i];
  }
  out.resize(k - 1);
  h.poly = out;
  return h;
}

double segment_distance(const Vec& a, const Vec& b, const Vec& p) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - a - s * ab).norm();
}

// Distance from p to lambda * hull.
double scaled_distance(const Hull& h, double lambda, const Vec& p) {
  if (h.dim == 1) {
    const double lo = lambda * h.lo, hi = lambda * h.hi;
    return p[0] < lo ? lo - p[0] : (p[0] > hi ? p[0] - hi : 0.0);
  }
  const auto& v = h.poly;
  if (v.size() == 1) return (p - lambda * v[0]).norm();
  if (v.size() == 2) return segment_distance(lambda * v[0], lambda * v[1], p);
  bool inside = true;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Vec a = lambda * v[k];
    const Vec b = lambda * v[(k + 1) % v.size()];
    if (cross(a, b, p) < 0) inside = false;
    best = std::min(best, segment_distance(a, b, p));
  }
  return inside ? 0.0 : best;
}

struct Candidate {
  std::uint32_t local;
  int s;
};

struct RobotGamma {
  std::vector<Candidate> list;
  bool clipped = false;
};

// Lazily built per-robot factors of Gamma, keyed by (robot, local, t).
class GammaTable {
 public:
  explicit GammaTable(const OracleInstance& o) : o_(o) {
    const std::size_t n = o.stage->robots();
    cells_.resize(n);
    hulls_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      cells_[i].resize(o.stage->lattices[i].size * static_cast<std::size_t>(o.steps + 1));
      hulls_[i].resize(o.stage->lattices[i].size);
    }
  }

  const RobotGamma& get(std::size_t i, std::size_t local, int t) {
    auto& cell = cells_[i][local * static_cast<std::size_t>(o_.steps + 1) + static_cast<std::size_t>(t)];
    if (!cell) cell = std::make_unique<RobotGamma>(build(i, local, t));
    return *cell;
  }

 private:
  RobotGamma build(std::size_t i, std::size_t local, int t) {
    const GridStage& st = *o_.stage;
    const double e = st.eps / st.h;
    RobotGamma g;
    if (!st.goal_proximate[i][local]) {
      const int s_lo = std::max(0, static_cast<int>(std::ceil(t - e - 2.0 - kTol)));
      const int s_hi = static_cast<int>(std::floor(t - e + 2.0 + kTol));
      for (std::size_t y : o_.moves[i][local]) {
        for (int s = s_lo; s <= s_hi; ++s) {
          if (s > o_.steps) {
            g.clipped = true;
            continue;
          }
          g.list.push_back({static_cast<std::uint32_t>(y), s});
        }
      }
      return g;
    }
    // Closed convex hull of the moving branch and the stay branch.
    if (hulls_[i][local].dim == 0) {
      std::vector<Vec> rel;
      for (const auto& end : o_.endpoints[i][local]) rel.push_back(end - st.coords[i][local]);
      hulls_[i][local] = make_hull(rel);
    }
    const Hull& hull = hulls_[i][local];
    const int s_lo = std::max(0, static_cast<int>(std::ceil(t - e - 2.0 - kTol)));
    const int s_hi = static_cast<int>(std::floor(t + 2.0 + kTol));
    const auto& lat = st.lattices[i];
    for (std::size_t y = 0; y < lat.size; ++y) {
      const Vec rel = st.coords[i][y] - st.coords[i][local];
      for (int s = s_lo; s <= s_hi; ++s) {
        const double d = (t - s) * st.h;
        const double lam_lo = std::max(0.0, (d - 2.0 * st.h) / st.eps);
        const double lam_hi = std::min(1.0, (d + 2.0 * st.h) / st.eps);
        if (lam_lo > lam_hi + kTol) continue;
        if (!hull_member(hull, rel, lam_lo, std::max(lam_lo, lam_hi), st.h)) continue;
        if (s > o_.steps) {
          g.clipped = true;
          continue;
        }
        g.list.push_back({static_cast<std::uint32_t>(y), s});
      }
    }
    return g;
  }

  // Is there lambda in [lo, hi] with dist(rel, lambda co(C)) <= lambda alpha + (1 - lambda) 2h?
  // The slack is convex in lambda, so a ternary search finds its minimum.
  bool hull_member(const Hull& hull, const Vec& rel, double lo, double hi, double h) const {
    auto slack = [&](double lam) {
      return scaled_distance(hull, lam, rel) - (lam * o_.alpha + (1.0 - lam) * 2.0 * h);
    };
    if (slack(lo) <= kTol || slack(hi) <= kTol) return true;
    double a = lo, b = hi;
    for (int it = 0; it < 100 && b - a > 1e-15; ++it) {
      const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
      if (slack(m1) < slack(m2)) {
        b = m2;
      } else {
        a = m1;
      }
    }
    return slack(0.5 * (a + b)) <= kTol;
  }

  const OracleInstance& o_;
  std::vector<std::vector<std::unique_ptr<RobotGamma>>> cells_;
  std::vector<std::vector<Hull>> hulls_;
};

std::size_t time_index(const OracleInstance& o, const std::vector<int>& t) {
  std::size_t idx = 0;
  for (int ti : t) idx = idx * static_cast<std::size_t>(o.steps + 1) + static_cast<std::size_t>(ti);
  return idx;
}

std::vector<int> time_decode(const OracleInstance& o, std::size_t idx) {
  std::vector<int> t(o.stage->robots());
  for (std::size_t i = t.size(); i-- > 0;) {
    t[i] = static_cast<int>(idx % static_cast<std::size_t>(o.steps + 1));
    idx /= static_cast<std::size_t>(o.steps + 1);
  }
  return t;
}

// Visits the joint successors of (x, t), stopping as soon as visit returns true.
template <typename F>
bool visit_gamma(const OracleInstance& o, GammaTable& table, NodeId x, const std::vector<int>& t, bool* clipped,
                 F&& visit) {
  const GridStage& st = *o.stage;
  const std::size_t n = st.robots();
  std::vector<const RobotGamma*> parts(n);
  for (std::size_t i = 0; i < n; ++i) {
    parts[i] = &table.get(i, st.local(x, i), t[i]);
    if (clipped != nullptr && parts[i]->clipped) *clipped = true;
    if (parts[i]->list.empty()) return false;
  }
  std::vector<std::size_t> pick(n, 0);
  std::vector<int> ts(n);
  while (true) {
    NodeId y = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Candidate& c = parts[i]->list[pick[i]];
      y += st.stride[i] * c.local;
      ts[i] = c.s;
    }
    if (o.safety.contains(y) && visit(y, ts)) return true;
    std::size_t i = n;
    while (i-- > 0) {
      if (++pick[i] < parts[i]->list.size()) break;
      pick[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) return false;
  }
}

}  // namespace

std::size_t OracleInstance::time_points() const {
  std::size_t p = 1;
  for (std::size_t i = 0; i < stage->robots(); ++i) p *= static_cast<std::size_t>(steps + 1);
  return p;
}

double OracleInstance::shadow() const {
  return options.shadow < 0.0 ? stage->eps + 2.0 * stage->h : options.shadow;
}

double hull_distance(const std::vector<Vec>& points, const Vec& p) {
  return scaled_distance(make_hull(points), 1.0, p);
}

OracleInstance make_oracle(const GridStage& stage, const NodeSet& safety, const OracleOptions& options) {
  OracleInstance o;
  o.stage = &stage;
  o.safety = safety;
  o.options = options;
  const double steps = options.t_max / stage.h;
  if (options.t_max < 0.0 || std::abs(steps - std::round(steps)) > 1e-6) {
    throw DomainError("oracle: t_max must be a nonnegative multiple of h");
  }
  o.steps = static_cast<int>(std::round(steps));
  const double points = static_cast<double>(stage.node_count) * std::pow(o.steps + 1.0, static_cast<double>(stage.robots()));
  if (points > static_cast<double>(options.cap)) {
    throw ValidationError("oracle_cap", "space-time lattice has " + std::to_string(static_cast<long long>(points)) +
                                            " points, cap is " + std::to_string(options.cap));
  }
  const Scenario& sc = *stage.scenario;
  const TeamBounds tb = team_bounds(sc);
  o.alpha = alpha(stage.h, stage.eps, tb.l_plus, tb.m_plus);
  o.kappa = kappa(stage.h, stage.eps);
  const std::size_t n = stage.robots();
  o.endpoints.resize(n);
  o.moves.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (stage.lattices[i].dim() > 2) throw DomainError("oracle: workspaces above two dimensions are not supported");
    const auto samples = control_samples(sc.robots[i].control_box, options.control_density);
    const std::size_t m = stage.lattices[i].size;
    o.endpoints[i].resize(m);
    o.moves[i].resize(m);
    for (std::size_t a = 0; a < m; ++a) {
      const Vec& x = stage.coords[i][a];
      for (const auto& u : samples) o.endpoints[i][a].push_back(x + stage.eps * eval_dynamics(sc.robots[i], x, u));
      if (stage.goal_proximate[i][a]) {
        o.moves[i][a] = {a};
        continue;
      }
      for (std::size_t b = 0; b < m; ++b) {
        const Vec& y = stage.coords[i][b];
        for (const auto& end : o.endpoints[i][a]) {
          if ((y - end).norm() <= o.alpha + kGeomTol) {
            o.moves[i][a].push_back(b);
            break;
          }
        }
      }
    }
  }
  return o;
}

ThetaTable theta_init(const OracleInstance& o) {
  const int n = static_cast<int>(o.stage->robots());
  ThetaTable t;
  t.stage = o.stage->index;
  t.values.reserve(o.stage->node_count);
  for (NodeId x = 0; x < o.stage->node_count; ++x) {
    t.values.push_back(ParetoSet::constant(n, o.safety.contains(x) ? 0.0 : std::numeric_limits<double>::infinity()));
  }
  return t;
}

ThetaTable theta_step(const ThetaTable& table, const OracleInstance& o) {
  const GridStage& st = *o.stage;
  if (table.stage != st.index) throw DomainError("theta_step: table belongs to another stage");
  const std::size_t n = st.robots();
  const int dim = static_cast<int>(n);
  ThetaTable next;
  next.stage = table.stage;
  next.sweep = table.sweep + 1;
  next.values.reserve(st.node_count);
  std::vector<double> inc(n);
  std::vector<std::size_t> pick(n);
  for (NodeId x = 0; x < st.node_count; ++x) {
    std::vector<const std::vector<std::size_t>*> parts(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = st.local(x, i);
      parts[i] = &o.moves[i][a];
      inc[i] = st.goal_proximate[i][a] ? 0.0 : o.kappa;
    }
    std::vector<double> flat;
    std::fill(pick.begin(), pick.end(), 0);
    bool any = std::all_of(parts.begin(), parts.end(), [](const auto* p) { return !p->empty(); });
    while (any) {
      NodeId y = 0;
      for (std::size_t i = 0; i < n; ++i) y += st.stride[i] * (*parts[i])[pick[i]];
      if (o.safety.contains(y)) {
        const ParetoSet& v = table.values[y];
        for (std::size_t k = 0; k < v.size(); ++k) {
          const double* p = v.data().data() + k * n;
          for (std::size_t i = 0; i < n; ++i) flat.push_back(p[i] + inc[i]);
        }
      }
      std::size_t i = n;
      while (i-- > 0) {
        if (++pick[i] < parts[i]->size()) break;
        pick[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
    next.values.push_back(flat.empty() ? ParetoSet::constant(dim, std::numeric_limits<double>::infinity())
                                       : reduce_frontier(std::move(flat), dim));
  }
  return next;
}

std::size_t spacetime_index(const OracleInstance& o, NodeId x, const std::vector<int>& t) {
  return static_cast<std::size_t>(x) * o.time_points() + time_index(o, t);
}

std::size_t SpaceTimeSet::count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

std::vector<SpaceTimeNode> gamma_step(const OracleInstance& o, const SpaceTimeNode& node, bool* clipped) {
  if (node.t.size() != o.stage->robots()) throw DomainError("gamma_step: time vector size mismatch");
  for (int ti : node.t) {
    if (ti < 0 || ti > o.steps) throw DomainError("gamma_step: time outside the lattice");
  }
  GammaTable table(o);
  std::vector<SpaceTimeNode> out;
  visit_gamma(o, table, node.x, node.t, clipped, [&](NodeId y, const std::vector<int>& s) {
    out.push_back({y, s});
    return false;
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<SpaceTimeSet> viability_recursion(const OracleInstance& o, int n_steps, bool reverse) {
  const std::size_t tp = o.time_points();
  const std::size_t total = o.size();
  std::vector<SpaceTimeSet> out;
  SpaceTimeSet s0;
  s0.stage = o.stage->index;
  s0.mask.assign(total, 0);
  for (NodeId x : o.safety.list) {
    std::fill(s0.mask.begin() + static_cast<std::ptrdiff_t>(x * tp),
              s0.mask.begin() + static_cast<std::ptrdiff_t>((x + 1) * tp), 1);
  }
  out.push_back(std::move(s0));
  GammaTable table(o);
  for (int n = 0; n < n_steps; ++n) {
    const SpaceTimeSet& cur = out.back();
    SpaceTimeSet next;
    next.stage = cur.stage;
    next.sweep = cur.sweep + 1;
    next.mask.assign(total, 0);
    for (std::size_t k = 0; k < total; ++k) {
      const std::size_t idx = reverse ? total - 1 - k : k;
      if (!cur.mask[idx]) continue;
      const NodeId x = idx / tp;
      const std::vector<int> t = time_decode(o, idx % tp);
      const bool hit = visit_gamma(o, table, x, t, nullptr, [&](NodeId y, const std::vector<int>& s) {
        return cur.mask[static_cast<std::size_t>(y) * tp + time_index(o, s)] != 0;
      });
      next.mask[idx] = hit ? 1 : 0;
    }
    out.push_back(std::move(next));
  }
  return out;
}

EquivalenceReport epi_equivalence_check(const OracleInstance& o, const ThetaTable& theta, const SpaceTimeSet& s_n) {
  if (theta.stage != s_n.stage || theta.stage != o.stage->index) {
    throw DomainError("epi_equivalence_check: stage mismatch");
  }
  if (theta.sweep != s_n.sweep) throw DomainError("epi_equivalence_check: sweep mismatch");
  if (s_n.mask.size() != o.size() || theta.values.size() != o.stage->node_count) {
    throw DomainError("epi_equivalence_check: size mismatch");
  }
  const double h = o.stage->h;
  const double limit = o.options.t_max - o.shadow();
  const std::size_t tp = o.time_points();
  const std::size_t n = o.stage->robots();
  EquivalenceReport rep;
  Vec tv(static_cast<Eigen::Index>(n));
  for (NodeId x : o.safety.list) {
    for (std::size_t ti = 0; ti < tp; ++ti) {
      const std::vector<int> t = time_decode(o, ti);
      bool inside = true;
      for (std::size_t i = 0; i < n; ++i) {
        tv[static_cast<Eigen::Index>(i)] = t[i] * h;
        if (t[i] * h > limit + kTol) inside = false;
      }
      if (!inside) continue;
      ++rep.checked;
      const bool in_s = s_n.mask[static_cast<std::size_t>(x) * tp + ti] != 0;
      const ParetoSet& v = theta.values[x];
      bool in_epi = false;
      for (std::size_t k = 0; k < v.size() && !in_epi; ++k) {
        const double* p = v.data().data() + k * n;
        bool below = true;
        for (std::size_t i = 0; i < n; ++i) below = below && p[i] <= tv[static_cast<Eigen::Index>(i)] + kTol;
        in_epi = below;
      }
      if (in_s != in_epi) {
        rep.ok = false;
        if (!rep.first) rep.first = Counterexample{x, t, in_s, in_epi};
      }
    }
  }
  return rep;
}

std::string counterexample_json(const OracleInstance& o, const Counterexample& c) {
  nlohmann::json j;
  j["stage"] = o.stage->index;
  j["node"] = c.node;
  nlohmann::json coords = nlohmann::json::array();
  for (const auto& x : o.stage->state(c.node)) coords.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  j["coords"] = coords;
  std::vector<double> t;
  for (int ti : c.t) t.push_back(ti * o.stage->h);
  j["t"] = t;
  j["in_viability"] = c.in_viability;
  j["in_epigraph"] = c.in_epigraph;
  return j.dump();
}

}  // namespace pmp

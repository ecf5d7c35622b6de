#include "pmp/dynamics_discretization.hpp"

#include "pmp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace pmp {

double alpha(double h, double eps, double l_plus, double m_plus) {
  return 2.0 * h + eps * h * l_plus + eps * eps * l_plus * m_plus;
}

double kappa(double h, double eps) {
  if (!(eps > 2.0 * h)) throw ScheduleError("kappa: temporal resolution must exceed twice the spatial resolution");
  // guard against eps/h landing a rounding error above an integer
  const double ratio = eps / h;
  double steps = std::ceil(ratio);
  if (steps - ratio > 1.0 - 1e-9) steps -= 1.0;
  return (steps - 2.0) * h;
}

Vec time_increment(const GridStage& stage, NodeId x) {
  const double d = -std::expm1(-kappa(stage.h, stage.eps));
  Vec dt(static_cast<Eigen::Index>(stage.robots()));
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    dt[static_cast<Eigen::Index>(i)] = stage.goal_proximate[i][stage.local(x, i)] ? 0.0 : d;
  }
  return dt;
}

std::vector<Vec> control_samples(const Box& box, int density) {
  if (density < 1) throw DomainError("control density must be positive");
  const auto d = box.dim();
  std::vector<int> counts(static_cast<std::size_t>(d));
  std::size_t total = 1;
  for (Eigen::Index k = 0; k < d; ++k) {
    counts[static_cast<std::size_t>(k)] = (box.hi[k] > box.lo[k] && density > 1) ? density : 1;
    total *= static_cast<std::size_t>(counts[static_cast<std::size_t>(k)]);
  }
  std::vector<Vec> out;
  out.reserve(total);
  for (std::size_t s = 0; s < total; ++s) {
    Vec u(d);
    std::size_t rem = s;
    for (Eigen::Index k = 0; k < d; ++k) {
      const int m = counts[static_cast<std::size_t>(k)];
      const auto j = static_cast<int>(rem % static_cast<std::size_t>(m));
      rem /= static_cast<std::size_t>(m);
      u[k] = m == 1 ? (box.hi[k] > box.lo[k] ? 0.5 * (box.lo[k] + box.hi[k]) : box.lo[k])
                    : box.lo[k] + (box.hi[k] - box.lo[k]) * j / (m - 1);
    }
    out.push_back(std::move(u));
  }
  return out;
}

namespace {

std::vector<RobotSuccessor> robot_successors(const GridStage& stage, std::size_t i, std::size_t l,
                                             const std::vector<Vec>& controls, double alpha_p,
                                             ControlAttribution attribution) {
  if (stage.goal_proximate[i][l]) return {RobotSuccessor{static_cast<std::uint32_t>(l), {}}};
  const auto& robot = stage.scenario->robots[i];
  const auto& lat = stage.lattices[i];
  const Vec& x = stage.coords[i][l];
  struct Acc {
    double best = 0.0;
    std::vector<std::int32_t> controls;
  };
  std::map<std::size_t, Acc> acc;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const Vec end = x + stage.eps * eval_dynamics(robot, x, controls[k]);
    for (auto node : lat.within(end, alpha_p)) {
      const double d = (stage.coords[i][node] - end).norm();
      auto [it, fresh] = acc.try_emplace(node);
      auto& a = it->second;
      if (attribution == ControlAttribution::kAllReaching) {
        a.controls.push_back(static_cast<std::int32_t>(k));
      } else if (fresh || d < a.best - 1e-12) {
        a.best = d;
        a.controls.assign(1, static_cast<std::int32_t>(k));
      } else if (d <= a.best + 1e-12) {
        a.controls.push_back(static_cast<std::int32_t>(k));
      }
    }
  }
  std::vector<RobotSuccessor> out;
  out.reserve(acc.size());
  for (auto& [node, a] : acc) out.push_back(RobotSuccessor{static_cast<std::uint32_t>(node), std::move(a.controls)});
  return out;
}

}  // namespace

SuccessorCache build_successor_cache(const GridStage& stage, const NodeSet& safety,
                                     const DiscretizationOptions& options) {
  if (stage.robots() > 16) throw ValidationError("team_size", "at most 16 robots are supported");
  SuccessorCache c;
  c.stage = &stage;
  c.safety = safety;
  c.options = options;
  const auto bounds = team_bounds(*stage.scenario);
  c.alpha = alpha(stage.h, stage.eps, bounds.l_plus, bounds.m_plus);
  c.kappa = kappa(stage.h, stage.eps);
  c.delta = -std::expm1(-c.kappa);
  for (std::size_t i = 0; i < stage.robots(); ++i) {
    c.controls.push_back(control_samples(stage.scenario->robots[i].control_box, options.control_density));
    std::vector<std::vector<RobotSuccessor>> lists(stage.lattices[i].size);
    parallel_chunks(lists.size(), worker_count(), [&](std::size_t b, std::size_t e, int) {
      for (std::size_t l = b; l < e; ++l) {
        lists[l] = robot_successors(stage, i, l, c.controls[i], c.alpha, options.attribution);
      }
    });
    c.robots.push_back(std::move(lists));
  }
  return c;
}

std::vector<NodeId> SuccessorCache::merged(NodeId x) const {
  std::vector<NodeId> out;
  for_each_successor(x, [&](NodeId id, const std::uint32_t*) { out.push_back(id); });
  return out;
}

Vec SuccessorCache::time_increment(NodeId x) const {
  Vec dt(static_cast<Eigen::Index>(stage->robots()));
  for (std::size_t i = 0; i < stage->robots(); ++i) {
    dt[static_cast<Eigen::Index>(i)] = stage->goal_proximate[i][stage->local(x, i)] ? 0.0 : delta;
  }
  return dt;
}

SuccessorSet successors(const GridStage& stage, NodeId x, const NodeSet& safety,
                        const DiscretizationOptions& options) {
  const std::size_t n = stage.robots();
  const auto bounds = team_bounds(*stage.scenario);
  const double a = alpha(stage.h, stage.eps, bounds.l_plus, bounds.m_plus);
  SuccessorSet out;
  out.node = x;
  out.frozen.resize(n);
  std::vector<std::vector<Vec>> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.frozen[i] = stage.goal_proximate[i][stage.local(x, i)];
    if (!out.frozen[i]) samples[i] = control_samples(stage.scenario->robots[i].control_box, options.control_density);
  }
  const TeamState xs = stage.state(x);
  std::vector<std::int32_t> pick(n, 0);
  auto count = [&](std::size_t i) { return out.frozen[i] ? std::size_t{1} : samples[i].size(); };
  while (true) {
    SuccessorSet::Sample s;
    std::vector<std::vector<std::size_t>> balls(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (out.frozen[i]) {
        s.control.push_back(-1);
        balls[i] = {stage.local(x, i)};
      } else {
        s.control.push_back(pick[i]);
        const Vec& u = samples[i][static_cast<std::size_t>(pick[i])];
        const Vec end = xs[i] + stage.eps * eval_dynamics(stage.scenario->robots[i], xs[i], u);
        balls[i] = stage.lattices[i].within(end, a);
      }
    }
    // product, robot n-1 fastest
    std::vector<std::size_t> idx(n, 0);
    bool empty = false;
    for (std::size_t i = 0; i < n; ++i) empty = empty || balls[i].empty();
    while (!empty) {
      NodeId id = 0;
      for (std::size_t i = 0; i < n; ++i) id += static_cast<NodeId>(balls[i][idx[i]]) * stage.stride[i];
      if (safety.contains(id)) s.successors.push_back(id);
      std::size_t i = n;
      while (i-- > 0) {
        if (++idx[i] < balls[i].size()) break;
        idx[i] = 0;
      }
      if (i == static_cast<std::size_t>(-1)) break;
    }
    out.merged.insert(out.merged.end(), s.successors.begin(), s.successors.end());
    out.samples.push_back(std::move(s));
    std::size_t i = n;
    while (i-- > 0) {
      if (static_cast<std::size_t>(++pick[i]) < count(i)) break;
      pick[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }
  std::sort(out.merged.begin(), out.merged.end());
  out.merged.erase(std::unique(out.merged.begin(), out.merged.end()), out.merged.end());
  return out;
}

namespace {

constexpr char kMagic[8] = {'P', 'M', 'P', 'S', 'U', 'C', 'C', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

void save_successor_cache(const SuccessorCache& c, std::uint64_t scenario_hash, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write successor cache " + path);
  os.write(kMagic, sizeof kMagic);
  put(os, kCacheVersion);
  put(os, c.stage->h);
  put(os, c.stage->eps);
  put(os, c.alpha);
  put(os, static_cast<std::int32_t>(c.options.control_density));
  put(os, static_cast<std::int32_t>(c.options.attribution));
  put(os, scenario_hash);
  put(os, static_cast<std::uint32_t>(c.robots.size()));
  for (const auto& per_robot : c.robots) {
    put(os, static_cast<std::uint64_t>(per_robot.size()));
    for (const auto& list : per_robot) {
      put(os, static_cast<std::uint32_t>(list.size()));
      for (const auto& e : list) {
        put(os, e.node);
        put(os, static_cast<std::uint32_t>(e.controls.size()));
        for (auto k : e.controls) put(os, k);
      }
    }
  }
}

bool load_successor_cache(SuccessorCache& c, std::uint64_t scenario_hash, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) return false;
  std::uint32_t version = 0, nrobots = 0;
  double h = 0, eps = 0, a = 0;
  std::int32_t density = 0, attribution = 0;
  std::uint64_t hash = 0;
  if (!get(is, version) || version != kCacheVersion) return false;
  if (!get(is, h) || !get(is, eps) || !get(is, a) || !get(is, density) || !get(is, attribution) ||
      !get(is, hash) || !get(is, nrobots)) {
    return false;
  }
  if (h != c.stage->h || eps != c.stage->eps || a != c.alpha || density != c.options.control_density ||
      attribution != static_cast<std::int32_t>(c.options.attribution) || hash != scenario_hash ||
      nrobots != c.stage->robots()) {
    return false;
  }
  std::vector<std::vector<std::vector<RobotSuccessor>>> robots(nrobots);
  for (std::uint32_t i = 0; i < nrobots; ++i) {
    std::uint64_t locals = 0;
    if (!get(is, locals) || locals != c.stage->lattices[i].size) return false;
    robots[i].resize(locals);
    for (auto& list : robots[i]) {
      std::uint32_t m = 0;
      if (!get(is, m)) return false;
      list.resize(m);
      for (auto& e : list) {
        std::uint32_t nc = 0;
        if (!get(is, e.node) || !get(is, nc)) return false;
        e.controls.resize(nc);
        for (auto& k : e.controls) {
          if (!get(is, k)) return false;
        }
      }
    }
  }
  c.robots = std::move(robots);
  return true;
}

}  // namespace pmp

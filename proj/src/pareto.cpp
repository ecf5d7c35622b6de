#include "pmp/pareto.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace pmp {

double quantize(double x) {
  if (!std::isfinite(x)) return x;
  return std::nearbyint(x / kQuantum) * kQuantum;
}

double kruzhkov(double t) {
  if (std::isnan(t) || t < 0.0) throw DomainError("kruzhkov: time must be nonnegative");
  if (std::isinf(t)) return 1.0;
  return -std::expm1(-t);
}

double kruzhkov_inv(double tau) {
  if (std::isnan(tau) || tau < 0.0 || tau > 1.0) throw DomainError("kruzhkov_inv: value outside [0,1]");
  if (tau == 1.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-tau);
}

Vec kruzhkov(const Vec& t) {
  Vec out(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) out[k] = kruzhkov(t[k]);
  return out;
}

Vec kruzhkov_inv(const Vec& tau) {
  Vec out(tau.size());
  for (Eigen::Index k = 0; k < tau.size(); ++k) out[k] = kruzhkov_inv(tau[k]);
  return out;
}

bool dominates(const double* a, const double* b, int dim) {
  for (int k = 0; k < dim; ++k) {
    if (a[k] > b[k]) return false;
  }
  return true;
}

bool dominates(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DomainError("dominates: length mismatch");
  return dominates(a.data(), b.data(), static_cast<int>(a.size()));
}

ParetoSet ParetoSet::constant(int dim, double value) {
  ParetoSet s(dim);
  s.data_.assign(static_cast<std::size_t>(dim), quantize(value));
  return s;
}

ParetoSet ParetoSet::singleton(const Vec& point) {
  return reduce_frontier(std::vector<double>(point.data(), point.data() + point.size()),
                         static_cast<int>(point.size()));
}

Vec ParetoSet::at(std::size_t k) const {
  return Eigen::Map<const Vec>(point(k), dim_);
}

std::vector<Vec> ParetoSet::points() const {
  std::vector<Vec> out;
  out.reserve(size());
  for (std::size_t k = 0; k < size(); ++k) out.push_back(at(k));
  return out;
}

bool ParetoSet::contains(const Vec& p) const {
  if (p.size() != dim_) return false;
  for (std::size_t k = 0; k < size(); ++k) {
    if (std::equal(point(k), point(k) + dim_, p.data())) return true;
  }
  return false;
}

ParetoSet reduce_frontier(std::vector<double> flat, int dim) {
  if (dim <= 0 || flat.empty()) throw DomainError("pareto_frontier: empty input");
  const std::size_t d = static_cast<std::size_t>(dim);
  const std::size_t n = flat.size() / d;
  for (auto& x : flat) x = quantize(x);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(flat.begin() + a * d, flat.begin() + (a + 1) * d,
                                        flat.begin() + b * d, flat.begin() + (b + 1) * d);
  });

  ParetoSet out(dim);
  auto& kept = out.data_;
  if (dim == 1) {
    kept.push_back(flat[order[0]]);
  } else if (dim == 2) {
    // Staircase: in lex order a point survives iff its second coordinate drops strictly.
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t idx : order) {
      const double* p = flat.data() + idx * d;
      if (kept.empty() || p[1] < best) {
        kept.push_back(p[0]);
        kept.push_back(p[1]);
        best = p[1];
      }
    }
  } else {
    // Any dominator precedes its victim in lex order, and domination is transitive,
    // so checking against survivors alone is enough.
    for (std::size_t idx : order) {
      const double* p = flat.data() + idx * d;
      bool dominated = false;
      for (std::size_t k = 0; k < kept.size(); k += d) {
        if (dominates(kept.data() + k, p, dim)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) kept.insert(kept.end(), p, p + d);
    }
  }
  return out;
}

ParetoSet pareto_frontier(const std::vector<Vec>& vectors) {
  if (vectors.empty()) throw DomainError("pareto_frontier: empty input");
  const auto dim = vectors.front().size();
  std::vector<double> flat;
  flat.reserve(vectors.size() * static_cast<std::size_t>(dim));
  for (const auto& v : vectors) {
    if (v.size() != dim) throw DomainError("pareto_frontier: length mismatch");
    flat.insert(flat.end(), v.data(), v.data() + dim);
  }
  return reduce_frontier(std::move(flat), static_cast<int>(dim));
}

bool epi_contains(const ParetoSet& frontier, const Vec& t) {
  if (t.size() != frontier.dim()) throw DomainError("epi_contains: length mismatch");
  for (std::size_t k = 0; k < frontier.size(); ++k) {
    if (dominates(frontier.point(k), t.data(), frontier.dim())) return true;
  }
  return false;
}

namespace {

template <typename Dist>
double directed(std::size_t na, std::size_t nb, Dist&& dist) {
  double worst = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nb && best > worst; ++j) best = std::min(best, dist(i, j));
    worst = std::max(worst, best);
  }
  return worst;
}

double point_dist(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int k = 0; k < dim; ++k) acc += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(acc);
}

// Distance from a to the upward cone of b.
double cone_dist(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double gap = std::max(b[k] - a[k], 0.0);
    acc += gap * gap;
  }
  return std::sqrt(acc);
}

}  // namespace

double hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  if (a.empty() || b.empty()) throw DomainError("hausdorff: empty set");
  auto ab = directed(a.size(), b.size(), [&](std::size_t i, std::size_t j) { return (a[i] - b[j]).norm(); });
  auto ba = directed(b.size(), a.size(), [&](std::size_t i, std::size_t j) { return (b[i] - a[j]).norm(); });
  return std::max(ab, ba);
}

double hausdorff(const ParetoSet& a, const ParetoSet& b) {
  if (a.empty() || b.empty()) throw DomainError("hausdorff: empty set");
  if (a.dim() != b.dim()) throw DomainError("hausdorff: dimension mismatch");
  const int d = a.dim();
  auto ab = directed(a.size(), b.size(), [&](std::size_t i, std::size_t j) { return point_dist(a.point(i), b.point(j), d); });
  auto ba = directed(b.size(), a.size(), [&](std::size_t i, std::size_t j) { return point_dist(b.point(i), a.point(j), d); });
  return std::max(ab, ba);
}

double frontier_distance(const ParetoSet& u, const ParetoSet& v) {
  if (u.empty() || v.empty()) throw DomainError("frontier_distance: empty set");
  if (u.dim() != v.dim()) throw DomainError("frontier_distance: dimension mismatch");
  const int d = u.dim();
  auto uv = directed(u.size(), v.size(), [&](std::size_t i, std::size_t j) { return cone_dist(u.point(i), v.point(j), d); });
  auto vu = directed(v.size(), u.size(), [&](std::size_t i, std::size_t j) { return cone_dist(v.point(i), u.point(j), d); });
  return std::max(uv, vu);
}

}  // namespace pmp

#pragma once

#include "pmp/core_model.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace pmp {

/// Grid on which transformed time values are stored. Exact in double for |x| < 2^12.
inline constexpr double kQuantum = 0x1p-40;

double quantize(double x);

/// Psi(t) = 1 - exp(-t). Accepts +inf (maps to 1); throws DomainError for t < 0 or NaN.
double kruzhkov(double t);
/// Inverse transform; tau = 1 gives +inf.
double kruzhkov_inv(double tau);
Vec kruzhkov(const Vec& t);
Vec kruzhkov_inv(const Vec& tau);

/// Product order: a_i <= b_i for every i.
bool dominates(const Vec& a, const Vec& b);
bool dominates(const double* a, const double* b, int dim);

/// Finite, mutually non-dominated, lexicographically sorted set of N-vectors.
/// Points live contiguously in `data()`, `dim()` doubles each.
class ParetoSet {
 public:
  ParetoSet() = default;
  explicit ParetoSet(int dim) : dim_(dim) {}

  /// {value * 1_N}
  static ParetoSet constant(int dim, double value);
  static ParetoSet singleton(const Vec& point);

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return data_.empty(); }
  const double* point(std::size_t k) const { return data_.data() + k * static_cast<std::size_t>(dim_); }
  Vec at(std::size_t k) const;
  std::vector<Vec> points() const;
  const std::vector<double>& data() const { return data_; }
  bool contains(const Vec& p) const;

  bool operator==(const ParetoSet& other) const { return dim_ == other.dim_ && data_ == other.data_; }
  bool operator!=(const ParetoSet& other) const { return !(*this == other); }

 private:
  friend ParetoSet reduce_frontier(std::vector<double> flat, int dim);
  int dim_ = 0;
  std::vector<double> data_;
};

/// Frontier of a flat point buffer (`dim` doubles per point). Values are quantized first.
/// Throws DomainError on empty input.
ParetoSet reduce_frontier(std::vector<double> flat, int dim);
ParetoSet pareto_frontier(const std::vector<Vec>& vectors);

/// True iff some frontier element dominates t.
bool epi_contains(const ParetoSet& frontier, const Vec& t);

/// Point-set Hausdorff distance (2-norm). Throws DomainError if either set is empty.
double hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b);
double hausdorff(const ParetoSet& a, const ParetoSet& b);

/// Hausdorff distance between the epigraphical profiles (v + R^N_{>=0}) ∩ [0,1]^N,
/// computed exactly from the minimal points.
double frontier_distance(const ParetoSet& u, const ParetoSet& v);

}  // namespace pmp

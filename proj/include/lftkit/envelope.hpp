#pragma once

#include <string>
#include <vector>

#include "lftkit/common.hpp"

namespace lftkit {

/// Axis-aligned box of state and input deviations (states first, then
/// inputs). All downstream sampling and normalization goes through it.
struct Hyperrectangle {
  Vector lower;
  Vector upper;
  std::vector<std::string> labels;

  Hyperrectangle() = default;
  Hyperrectangle(Vector lo, Vector hi, std::vector<std::string> names = {});

  /// Symmetric box [-half, half] per coordinate.
  static Hyperrectangle symmetric(const Vector& half_width,
                                  std::vector<std::string> names = {});

  int dim() const { return static_cast<int>(lower.size()); }
  Vector center() const { return 0.5 * (lower + upper); }
  Vector half_width() const { return 0.5 * (upper - lower); }
  bool contains(const Eigen::Ref<const Vector>& p, double tol = 0.0) const;

  /// Throws DomainError if a bound is inverted or non-finite.
  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
};

/// Value and one-step increment bounds of the scheduling parameters.
struct ParameterSet {
  std::vector<Interval> value_bounds;
  std::vector<Interval> rate_bounds;

  int size() const { return static_cast<int>(value_bounds.size()); }
  void validate() const;
};

/// Number of primes available as Halton bases.
inline constexpr int kMaxHaltonDim = 100;

/// The i-th prime (0-based), i < kMaxHaltonDim.
int nth_prime(int i);

/// Radical inverse of index in the given base.
double radical_inverse(std::uint64_t index, int base);

/// Halton points mapped into `box`, one point per row. Point j uses the
/// sequence index skip + j, so skip = 1 drops the all-zero point.
Matrix halton_sample(int dim, int count, const Hyperrectangle& box,
                     std::uint64_t skip = 1);

/// Hickernell modified L2-star discrepancy of points in the unit cube
/// (one point per row), evaluated with its closed form.
double ml2_discrepancy(const Matrix& points);

/// Affine map of each row of `points` from `box` onto the unit cube.
Matrix normalize_to_unit(const Matrix& points, const Hyperrectangle& box);

/// Inverse of normalize_to_unit.
Matrix denormalize_from_unit(const Matrix& unit_points,
                             const Hyperrectangle& box);

/// Running sums of the ML2 closed form, so point clouds can be grown one
/// group at a time without recomputing the double sum.
class Ml2Accumulator {
 public:
  explicit Ml2Accumulator(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  long count() const { return count_; }

  /// Per-point term prod_k (3 - x_k^2) / 2 summed over rows.
  static double linear_sum(const Matrix& points);
  /// sum_{i,j} prod_k (2 - max(a_ik, b_jk)).
  static double cross_sum(const Matrix& a, const Matrix& b);

  /// Discrepancy if a group with the given precomputed sums were added.
  /// `cross_with_current` is cross_sum(current cloud, group).
  double discrepancy_with(long group_count, double group_linear,
                          double group_self, double cross_with_current) const;

  void add(long group_count, double group_linear, double group_self,
           double cross_with_current);

  double discrepancy() const;

 private:
  int dim_;
  long count_ = 0;
  double linear_ = 0.0;
  double pair_ = 0.0;
};

}  // namespace lftkit

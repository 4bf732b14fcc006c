#pragma once

#include <map>
#include <vector>

#include "lftkit/common.hpp"

namespace lftkit {

/// Sparse multivariate polynomial with real coefficients, keyed by the
/// exponent vector. Iteration order is the key order, so every operation
/// is deterministic.
class Polynomial {
 public:
  using Exponents = std::vector<int>;

  explicit Polynomial(int num_vars = 0) : num_vars_(num_vars) {}

  static Polynomial constant(int num_vars, double value);
  /// offset + sum_j weights[j] * v_j
  static Polynomial affine(const Vector& weights, double offset);

  int num_vars() const { return num_vars_; }
  const std::map<Exponents, double>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  void add_term(const Exponents& exponents, double coefficient);

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double scalar) const;
  Polynomial pow(int exponent) const;

  double evaluate(const Eigen::Ref<const Vector>& values) const;
  int total_degree() const;

 private:
  int num_vars_;
  std::map<Exponents, double> terms_;
};

}  // namespace lftkit

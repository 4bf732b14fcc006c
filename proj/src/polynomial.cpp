#include "lftkit/polynomial.hpp"

#include <algorithm>

namespace lftkit {

Polynomial Polynomial::constant(int num_vars, double value) {
  Polynomial p(num_vars);
  p.add_term(Exponents(static_cast<std::size_t>(num_vars), 0), value);
  return p;
}

Polynomial Polynomial::affine(const Vector& weights, double offset) {
  const int nv = static_cast<int>(weights.size());
  Polynomial p = constant(nv, offset);
  for (int j = 0; j < nv; ++j) {
    Exponents e(static_cast<std::size_t>(nv), 0);
    e[static_cast<std::size_t>(j)] = 1;
    p.add_term(e, weights[j]);
  }
  return p;
}

void Polynomial::add_term(const Exponents& exponents, double coefficient) {
  if (static_cast<int>(exponents.size()) != num_vars_) {
    throw DomainError("polynomial: exponent length mismatch");
  }
  if (coefficient == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(exponents, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  for (const auto& [e, c] : other.terms_) out.add_term(e, c);
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (num_vars_ != other.num_vars_) throw DomainError("polynomial: variable count mismatch");
  Polynomial out(num_vars_);
  for (const auto& [ea, ca] : terms_) {
    for (const auto& [eb, cb] : other.terms_) {
      Exponents e(ea.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      out.add_term(e, ca * cb);
    }
  }
  return out;
}

Polynomial Polynomial::operator*(double scalar) const {
  Polynomial out(num_vars_);
  for (const auto& [e, c] : terms_) out.add_term(e, c * scalar);
  return out;
}

Polynomial Polynomial::pow(int exponent) const {
  Polynomial out = constant(num_vars_, 1.0);
  for (int i = 0; i < exponent; ++i) out = out * *this;
  return out;
}

double Polynomial::evaluate(const Eigen::Ref<const Vector>& values) const {
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double term = c;
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (int k = 0; k < e[i]; ++k) term *= values[static_cast<Eigen::Index>(i)];
    }
    sum += term;
  }
  return sum;
}

int Polynomial::total_degree() const {
  int degree = 0;
  for (const auto& [e, c] : terms_) {
    int d = 0;
    for (int v : e) d += v;
    degree = std::max(degree, d);
  }
  return degree;
}

}  // namespace lftkit

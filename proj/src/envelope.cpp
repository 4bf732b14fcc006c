#include "lftkit/envelope.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace lftkit {

namespace {

constexpr std::array<int, kMaxHaltonDim> kPrimes = [] {
  std::array<int, kMaxHaltonDim> primes{};
  int found = 0;
  for (int candidate = 2; found < kMaxHaltonDim; ++candidate) {
    bool is_prime = true;
    for (int d = 2; d * d <= candidate; ++d) {
      if (candidate % d == 0) {
        is_prime = false;
        break;
      }
    }
    if (is_prime) primes[found++] = candidate;
  }
  return primes;
}();

double ml2_from_sums(int dim, long n, double linear, double pair) {
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  const double d2 = std::pow(4.0 / 3.0, dim) - 2.0 / nn * linear + pair / (nn * nn);
  return std::sqrt(std::max(d2, 0.0));
}

}  // namespace

Hyperrectangle::Hyperrectangle(Vector lo, Vector hi,
                               std::vector<std::string> names)
    : lower(std::move(lo)), upper(std::move(hi)), labels(std::move(names)) {
  if (labels.empty()) {
    for (int i = 0; i < lower.size(); ++i) labels.push_back("z" + std::to_string(i + 1));
  }
  validate();
}

Hyperrectangle Hyperrectangle::symmetric(const Vector& half_width,
                                         std::vector<std::string> names) {
  return Hyperrectangle(-half_width, half_width, std::move(names));
}

bool Hyperrectangle::contains(const Eigen::Ref<const Vector>& p, double tol) const {
  if (p.size() != lower.size()) return false;
  for (int i = 0; i < p.size(); ++i) {
    if (!(p[i] >= lower[i] - tol && p[i] <= upper[i] + tol)) return false;
  }
  return true;
}

void Hyperrectangle::validate() const {
  if (lower.size() != upper.size()) {
    throw DomainError("hyperrectangle: lower/upper size mismatch");
  }
  if (!labels.empty() && static_cast<int>(labels.size()) != lower.size()) {
    throw DomainError("hyperrectangle: label count does not match dimension");
  }
  for (int i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      std::ostringstream os;
      os << "hyperrectangle: invalid bounds [" << lower[i] << ", " << upper[i]
         << "] in dimension " << i;
      throw DomainError(os.str());
    }
  }
}

void ParameterSet::validate() const {
  if (value_bounds.size() != rate_bounds.size()) {
    throw DomainError("parameter set: value/rate bound count mismatch");
  }
  for (std::size_t i = 0; i < value_bounds.size(); ++i) {
    const auto& v = value_bounds[i];
    const auto& r = rate_bounds[i];
    if (v.lo > v.hi || r.lo > r.hi) {
      throw DomainError("parameter set: inverted bound for parameter " + std::to_string(i));
    }
    const double span = v.width();
    if (std::abs(r.lo) > span * (1.0 + 1e-12) || std::abs(r.hi) > span * (1.0 + 1e-12)) {
      throw DomainError("parameter set: rate bound exceeds value range for parameter " +
                        std::to_string(i));
    }
  }
}

int nth_prime(int i) {
  if (i < 0 || i >= kMaxHaltonDim) {
    throw UnsupportedDimensionError("halton: prime table exhausted (dimension > " +
                                    std::to_string(kMaxHaltonDim) + ")");
  }
  return kPrimes[static_cast<std::size_t>(i)];
}

double radical_inverse(std::uint64_t index, int base) {
  const double inv_base = 1.0 / base;
  double result = 0.0;
  double scale = inv_base;
  while (index > 0) {
    result += static_cast<double>(index % static_cast<std::uint64_t>(base)) * scale;
    index /= static_cast<std::uint64_t>(base);
    scale *= inv_base;
  }
  return result;
}

Matrix halton_sample(int dim, int count, const Hyperrectangle& box,
                     std::uint64_t skip) {
  if (dim <= 0 || count <= 0) throw DomainError("halton: dim and count must be positive");
  if (dim > kMaxHaltonDim) {
    throw UnsupportedDimensionError("halton: dimension " + std::to_string(dim) +
                                    " exceeds prime table");
  }
  if (dim != box.dim()) throw DomainError("halton: dim does not match box dimension");
  Matrix points(count, dim);
  for (int j = 0; j < count; ++j) {
    const std::uint64_t index = skip + static_cast<std::uint64_t>(j);
    for (int k = 0; k < dim; ++k) {
      const double t = radical_inverse(index, kPrimes[static_cast<std::size_t>(k)]);
      points(j, k) = box.lower[k] + t * (box.upper[k] - box.lower[k]);
    }
  }
  return points;
}

double Ml2Accumulator::linear_sum(const Matrix& points) {
  double sum = 0.0;
  for (int i = 0; i < points.rows(); ++i) {
    double prod = 1.0;
    for (int k = 0; k < points.cols(); ++k) {
      prod *= 0.5 * (3.0 - points(i, k) * points(i, k));
    }
    sum += prod;
  }
  return sum;
}

double Ml2Accumulator::cross_sum(const Matrix& a, const Matrix& b) {
  double sum = 0.0;
  const int d = static_cast<int>(a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) {
      double prod = 1.0;
      for (int k = 0; k < d; ++k) prod *= 2.0 - std::max(a(i, k), b(j, k));
      sum += prod;
    }
  }
  return sum;
}

double Ml2Accumulator::discrepancy_with(long group_count, double group_linear,
                                        double group_self,
                                        double cross_with_current) const {
  return ml2_from_sums(dim_, count_ + group_count, linear_ + group_linear,
                       pair_ + group_self + 2.0 * cross_with_current);
}

void Ml2Accumulator::add(long group_count, double group_linear, double group_self,
                         double cross_with_current) {
  count_ += group_count;
  linear_ += group_linear;
  pair_ += group_self + 2.0 * cross_with_current;
}

double Ml2Accumulator::discrepancy() const {
  return ml2_from_sums(dim_, count_, linear_, pair_);
}

double ml2_discrepancy(const Matrix& points) {
  if (points.rows() == 0) throw DomainError("ml2: at least one point required");
  for (int i = 0; i < points.rows(); ++i) {
    for (int k = 0; k < points.cols(); ++k) {
      const double x = points(i, k);
      if (!(x >= 0.0 && x <= 1.0)) {
        throw DomainError("ml2: coordinate outside [0,1]");
      }
    }
  }
  return ml2_from_sums(static_cast<int>(points.cols()), points.rows(),
                       Ml2Accumulator::linear_sum(points),
                       Ml2Accumulator::cross_sum(points, points));
}

Matrix normalize_to_unit(const Matrix& points, const Hyperrectangle& box) {
  if (points.cols() != box.dim()) throw DomainError("normalize: dimension mismatch");
  Matrix out(points.rows(), points.cols());
  for (int k = 0; k < box.dim(); ++k) {
    const double width = box.upper[k] - box.lower[k];
    if (width <= 0.0) {
      throw DegenerateDimensionError("normalize: zero-width dimension " + std::to_string(k));
    }
    out.col(k) = (points.col(k).array() - box.lower[k]) / width;
  }
  return out;
}

Matrix denormalize_from_unit(const Matrix& unit_points, const Hyperrectangle& box) {
  if (unit_points.cols() != box.dim()) throw DomainError("denormalize: dimension mismatch");
  Matrix out(unit_points.rows(), unit_points.cols());
  for (int k = 0; k < box.dim(); ++k) {
    out.col(k) = box.lower[k] + unit_points.col(k).array() * (box.upper[k] - box.lower[k]);
  }
  return out;
}

}  // namespace lftkit

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "lftkit/envelope.hpp"

using namespace lftkit;

namespace {

Hyperrectangle unit_box(int dim) {
  return Hyperrectangle(Vector::Zero(dim), Vector::Ones(dim));
}

// Squared discrepancy from its integral definition: for every nonempty
// coordinate subset u, the mean squared local discrepancy of the projected
// points over anchored boxes [0, y_u], estimated by plain Monte Carlo.
double ml2_monte_carlo(const Matrix& pts, int samples, std::uint64_t seed) {
  const int d = static_cast<int>(pts.cols());
  const int n = static_cast<int>(pts.rows());
  Rng rng(seed);
  double total = 0.0;
  for (int mask = 1; mask < (1 << d); ++mask) {
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
      double volume = 1.0;
      int inside = 0;
      Vector y(d);
      for (int k = 0; k < d; ++k) {
        y[k] = uniform01(rng);
        if (mask & (1 << k)) volume *= y[k];
      }
      for (int i = 0; i < n; ++i) {
        bool in = true;
        for (int k = 0; k < d && in; ++k) {
          if ((mask & (1 << k)) && pts(i, k) > y[k]) in = false;
        }
        inside += in ? 1 : 0;
      }
      const double local = volume - static_cast<double>(inside) / n;
      acc += local * local;
    }
    total += acc / samples;
  }
  return total;
}

}  // namespace

TEST_CASE("halton base-2 sequence") {
  const Matrix pts = halton_sample(1, 3, unit_box(1), 1);
  CHECK(pts(0, 0) == doctest::Approx(0.5));
  CHECK(pts(1, 0) == doctest::Approx(0.25));
  CHECK(pts(2, 0) == doctest::Approx(0.75));
  CHECK(halton_sample(1, 1, unit_box(1), 0)(0, 0) == 0.0);
}

TEST_CASE("halton uses consecutive primes and maps into the box") {
  CHECK(nth_prime(0) == 2);
  CHECK(nth_prime(4) == 11);
  CHECK(radical_inverse(5, 3) == doctest::Approx(7.0 / 9.0));
  const Hyperrectangle box(Vector::Constant(3, -2.0), Vector::Constant(3, 4.0));
  const Matrix pts = halton_sample(3, 200, box);
  for (int i = 0; i < pts.rows(); ++i) CHECK(box.contains(pts.row(i).transpose()));
  CHECK_THROWS_AS(halton_sample(kMaxHaltonDim + 1, 3, unit_box(kMaxHaltonDim + 1)), Error);
}

TEST_CASE("halton beats pseudorandom sets on ML2") {
  const double halton = ml2_discrepancy(halton_sample(2, 1000, unit_box(2)));
  std::vector<double> random;
  Rng rng(42);
  for (int r = 0; r < 20; ++r) {
    Matrix pts(1000, 2);
    for (int i = 0; i < pts.size(); ++i) pts.data()[i] = uniform01(rng);
    random.push_back(ml2_discrepancy(pts));
  }
  std::nth_element(random.begin(), random.begin() + 10, random.end());
  CHECK(halton < random[10]);
}

TEST_CASE("ML2 closed form matches the integral definition") {
  Matrix single(1, 1);
  single << 0.0;
  CHECK(std::abs(ml2_discrepancy(single) - std::sqrt(ml2_monte_carlo(single, 1000000, 1))) < 1e-2);
  const Matrix halton16 = halton_sample(2, 16, unit_box(2));
  CHECK(std::abs(ml2_discrepancy(halton16) - std::sqrt(ml2_monte_carlo(halton16, 200000, 2))) < 1e-2);
}

TEST_CASE("ML2 is deterministic, permutation invariant and finite for duplicates") {
  const Matrix pts = halton_sample(3, 50, unit_box(3));
  CHECK(ml2_discrepancy(pts) == ml2_discrepancy(pts));
  const Matrix reversed = pts.colwise().reverse();
  CHECK(ml2_discrepancy(reversed) == doctest::Approx(ml2_discrepancy(pts)).epsilon(1e-12));
  Matrix dup(51, 3);
  dup << pts, pts.row(7);
  const double value = ml2_discrepancy(dup);
  CHECK(std::isfinite(value));
  CHECK(value >= 0.0);
  Matrix outside(1, 1);
  outside << 1.5;
  CHECK_THROWS_AS(ml2_discrepancy(outside), DomainError);
}

TEST_CASE("ML2 accumulator agrees with the batch value") {
  const Matrix a = halton_sample(2, 30, unit_box(2));
  const Matrix b = halton_sample(2, 20, unit_box(2), 500);
  Ml2Accumulator acc(2);
  acc.add(a.rows(), Ml2Accumulator::linear_sum(a), Ml2Accumulator::cross_sum(a, a), 0.0);
  CHECK(acc.discrepancy() == doctest::Approx(ml2_discrepancy(a)).epsilon(1e-12));
  Matrix both(50, 2);
  both << a, b;
  const double predicted = acc.discrepancy_with(b.rows(), Ml2Accumulator::linear_sum(b),
                                                Ml2Accumulator::cross_sum(b, b), Ml2Accumulator::cross_sum(a, b));
  CHECK(predicted == doctest::Approx(ml2_discrepancy(both)).epsilon(1e-12));
}

TEST_CASE("unit normalization") {
  const Hyperrectangle box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  Matrix zero(1, 1);
  zero << 0.0;
  CHECK(normalize_to_unit(zero, box)(0, 0) == doctest::Approx(0.5));
  const Hyperrectangle wide(Vector::Map(std::vector<double>{-3.0, 0.5, -1.0}.data(), 3),
                            Vector::Map(std::vector<double>{2.0, 4.0, 0.0}.data(), 3));
  CHECK(normalize_to_unit(wide.lower.transpose(), wide).norm() == 0.0);
  Rng rng(7);
  Matrix pts(100, 3);
  for (int i = 0; i < 100; ++i) {
    for (int k = 0; k < 3; ++k) pts(i, k) = uniform(rng, wide.lower[k], wide.upper[k]);
  }
  const Matrix back = denormalize_from_unit(normalize_to_unit(pts, wide), wide);
  CHECK((back - pts).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("box and parameter-set validation") {
  CHECK_THROWS_AS(Hyperrectangle(Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)), DomainError);
  ParameterSet ok{{{-1.0, 1.0}}, {{-2.0, 2.0}}};
  CHECK_NOTHROW(ok.validate());
  ParameterSet fast{{{-1.0, 1.0}}, {{-3.0, 3.0}}};
  CHECK_THROWS_AS(fast.validate(), DomainError);
  ParameterSet inverted{{{1.0, -1.0}}, {{-1.0, 1.0}}};
  CHECK_THROWS_AS(inverted.validate(), DomainError);
}

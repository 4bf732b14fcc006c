#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdlib>

#include "lftkit/dynamics.hpp"
#include "lftkit/systems.hpp"

using namespace lftkit;

namespace {

Matrix random_matrix(int r, int c, Rng& rng) {
  Matrix m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.0, 1.0);
  return m;
}

// exp(A t) through an eigendecomposition, valid for diagonalizable A.
Matrix expm_eig(const Matrix& a, double t) {
  Eigen::EigenSolver<Matrix> es(a);
  const Eigen::MatrixXcd v = es.eigenvectors();
  const Eigen::VectorXcd l = (es.eigenvalues() * t).array().exp();
  return (v * l.asDiagonal() * v.inverse()).real();
}

std::string plugin_command() {
  return std::string("python3 ") + LFTKIT_TEST_DATA + "/pendulum_plugin.py";
}

}  // namespace

TEST_CASE("pendulum linearization at the origin") {
  const auto sys = systems::pendulum(9.81, 0.5);
  const auto lin = linearize(sys, Vector::Zero(2), Vector::Zero(1));
  Matrix a(2, 2);
  a << 0, 1, -9.81, -0.5;
  CHECK((lin.A - a).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(lin.B(0, 0)) < 1e-12);
  CHECK(lin.B(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("central differences recover linear systems and Van der Pol") {
  Rng rng(3);
  const Matrix a = random_matrix(3, 3, rng), b = random_matrix(3, 2, rng);
  auto sys = systems::linear(a, b, Matrix::Identity(3, 3), Matrix::Zero(3, 2));
  sys.jacobian_f = nullptr;
  sys.jacobian_h = nullptr;
  const auto lin = linearize(sys, Vector::Constant(3, 0.7), Vector::Constant(2, -0.3));
  CHECK((lin.A - a).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((lin.B - b).cwiseAbs().maxCoeff() < 1e-8);

  auto vdp = systems::van_der_pol(1.3);
  vdp.jacobian_f = nullptr;
  const auto lv = linearize(vdp, Vector::Zero(2), Vector::Zero(1));
  Matrix expected(2, 2);
  expected << 0, 1, -1, 1.3;
  CHECK((lv.A - expected).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero-order hold") {
  Matrix zero = Matrix::Zero(1, 1), one = Matrix::Ones(1, 1);
  auto [ad, bd] = discretize_zoh(zero, one, 1.0);
  CHECK(ad(0, 0) == doctest::Approx(1.0));
  CHECK(bd(0, 0) == doctest::Approx(1.0));

  const double tau = 0.3;
  Matrix a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  std::tie(ad, bd) = discretize_zoh(a, b, tau);
  CHECK(ad(0, 1) == doctest::Approx(tau));
  CHECK(bd(0, 0) == doctest::Approx(tau * tau / 2));
  CHECK(bd(1, 0) == doctest::Approx(tau));

  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix ac = random_matrix(3, 3, rng) - 2.0 * Matrix::Identity(3, 3);
    std::tie(ad, bd) = discretize_zoh(ac, random_matrix(3, 1, rng), 0.1);
    CHECK((ad - expm_eig(ac, 0.1)).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(discretize_zoh(a, b, 0.0), DomainError);
}

TEST_CASE("RK4 simulation") {
  NonlinearSystem still;
  still.state_dim = 2;
  still.input_dim = 1;
  still.output_dim = 2;
  still.f = [](const Vector&, const Vector&) { return Vector(Vector::Zero(2)); };
  still.h = [](const Vector& x, const Vector&) { return x; };
  Vector x0(2);
  x0 << 0.3, -0.2;
  auto traj = simulate_nonlinear(still, x0, Matrix::Zero(10, 1), 0.1);
  CHECK((traj.states.rowwise() - x0.transpose()).cwiseAbs().maxCoeff() == 0.0);

  NonlinearSystem decay = still;
  decay.state_dim = 1;
  decay.output_dim = 1;
  decay.f = [](const Vector& x, const Vector&) { return Vector(-x); };
  traj = simulate_nonlinear(decay, Vector::Ones(1), Matrix::Zero(1000, 1), 1e-3, 1);
  CHECK(std::abs(traj.states(1000, 0) - std::exp(-1.0)) < 1e-8);

  // Undamped pendulum conserves 0.5 w^2 + g/l (1 - cos theta).
  const auto pend = systems::pendulum(9.81, 0.0);
  Vector start(2);
  start << 0.8, 0.0;
  traj = simulate_nonlinear(pend, start, Matrix::Zero(10000, 1), 1e-3, 1);
  auto energy = [](double th, double w) { return 0.5 * w * w + 9.81 * (1.0 - std::cos(th)); };
  const double e0 = energy(start[0], start[1]);
  const double e1 = energy(traj.states(10000, 0), traj.states(10000, 1));
  CHECK(std::abs(e1 - e0) / e0 < 1e-6);
}

TEST_CASE("divergence is reported with its time") {
  NonlinearSystem blow;
  blow.state_dim = 1;
  blow.input_dim = 1;
  blow.output_dim = 1;
  blow.f = [](const Vector& x, const Vector&) { return Vector(x.array().square()); };
  blow.h = [](const Vector& x, const Vector&) { return x; };
  try {
    simulate_nonlinear(blow, Vector::Ones(1), Matrix::Zero(300, 1), 0.01);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time() > 0.9);
    CHECK(e.time() < 1.05);
  }
}

TEST_CASE("scalar LQR matches the closed-form DARE") {
  const double a = 0.5, b = 1.0, q = 1.0, r = 1.0;
  // P = a^2 P r / (r + b^2 P) + q  ->  b^2 P^2 + (r - a^2 r - q b^2) P - q r = 0
  const double qa = b * b, qb = r - a * a * r - q * b * b, qc = -q * r;
  const double p = (-qb + std::sqrt(qb * qb - 4 * qa * qc)) / (2 * qa);
  const Matrix k = lqr_state_feedback(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
                                      Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r));
  CHECK(k(0, 0) == doctest::Approx(a * b * p / (r + b * b * p)).epsilon(1e-9));
}

TEST_CASE("LQR stabilizes and vanishes without state weight") {
  Matrix schur(2, 2);
  schur << 0.5, 0.1, 0.0, 0.3;
  const Matrix k0 = lqr_state_feedback(schur, Matrix::Ones(2, 1), Matrix::Zero(2, 2), Matrix::Identity(1, 1));
  CHECK(k0.cwiseAbs().maxCoeff() < 1e-9);

  Rng rng(5);
  int checked = 0;
  while (checked < 50) {
    const Matrix a = 1.5 * random_matrix(3, 3, rng);
    const Matrix b = random_matrix(3, 2, rng);
    // controllability as a stand-in for stabilizability
    Matrix ctrb(3, 6);
    ctrb << b, a * b, a * a * b;
    if (Eigen::FullPivLU<Matrix>(ctrb).rank() < 3) continue;
    const Matrix k = lqr_state_feedback(a, b, Matrix::Identity(3, 3), Matrix::Identity(2, 2));
    CHECK(spectral_radius(a - b * k) < 1.0);
    ++checked;
  }
}

TEST_CASE("closed-loop simulation holds deviations") {
  const auto sys = systems::pendulum();
  const auto lin = discrete_linear_model(sys, Vector::Zero(2), Vector::Zero(1), 0.01);
  const Matrix k = lqr_state_feedback(lin.A, lin.B, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  const auto traj = simulate_nonlinear_closed_loop(sys, lin, k, Vector::Zero(2), Matrix::Zero(50, 1));
  CHECK(traj.states.cwiseAbs().maxCoeff() == 0.0);
  CHECK(traj.inputs.rows() == 50);
  CHECK(traj.states.rows() == 51);
}

TEST_CASE("subprocess plugin reproduces the built-in pendulum") {
  if (std::system("python3 -c pass > /dev/null 2>&1") != 0) {
    MESSAGE("python3 not available, plugin test skipped");
    return;
  }
  const auto plug = systems::plugin(plugin_command());
  const auto ref = systems::pendulum();
  REQUIRE(plug.state_dim == 2);
  REQUIRE(plug.input_dim == 1);
  Vector x(2), u(1);
  x << 0.4, -0.7;
  u << 0.3;
  CHECK((plug.f(x, u) - ref.f(x, u)).norm() < 1e-12);
  CHECK((plug.h(x, u) - ref.h(x, u)).norm() < 1e-12);
  const auto a = discrete_linear_model(plug, Vector::Zero(2), Vector::Zero(1), 0.01);
  const auto b = discrete_linear_model(ref, Vector::Zero(2), Vector::Zero(1), 0.01);
  CHECK((a.A - b.A).cwiseAbs().maxCoeff() < 1e-7);
  CHECK_THROWS_AS(systems::plugin("python3 -c 'import sys; sys.exit(0)'").f(x, u), Error);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lftkit/lpvlft.hpp"
#include "support.hpp"

using namespace lftkit;

namespace {

MonomialBasis one_block(int vars, int states, int outputs, std::vector<std::vector<int>> rows, int equation = 0) {
  MonomialBasis b;
  b.num_vars = vars;
  b.num_state_equations = states;
  for (int k = 0; k < states + outputs; ++k) b.blocks.emplace_back(0, vars);
  IntMatrix block(static_cast<int>(rows.size()), vars);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (int v = 0; v < vars; ++v) block(static_cast<int>(j), v) = rows[j][static_cast<std::size_t>(v)];
  }
  b.blocks[static_cast<std::size_t>(equation)] = block;
  return b;
}

PnlssModel hand_model(const MonomialBasis& basis, std::vector<Vector> coefficients) {
  DiscreteLinearModel lin;
  lin.A = Matrix::Identity(2, 2);
  lin.B = Matrix::Zero(2, 1);
  lin.C = Matrix::Zero(1, 2);
  lin.D = Matrix::Zero(1, 1);
  lin.tau = 0.01;
  lin.x_op = Vector::Zero(2);
  lin.u_op = Vector::Zero(1);
  return assemble_pnlss(lin, basis, std::move(coefficients), test::box3(1, 1, 1));
}

Vector sample_in(const ParameterSet& set, Rng& rng) {
  Vector rho(set.size());
  for (int i = 0; i < set.size(); ++i) {
    const auto& b = set.value_bounds[static_cast<std::size_t>(i)];
    rho[i] = uniform(rng, b.lo, b.hi);
  }
  return rho;
}

Vector sample_in(const Hyperrectangle& box, Rng& rng) {
  Vector w(box.dim());
  for (int i = 0; i < box.dim(); ++i) w[i] = uniform(rng, box.lower[i], box.upper[i]);
  return w;
}

LpvModel one_parameter_lpv(const Matrix& m1) {
  LpvModel lpv;
  lpv.state_dim = 2;
  lpv.input_dim = 1;
  lpv.output_dim = 1;
  lpv.base = Matrix::Zero(3, 3);
  lpv.base.topLeftCorner(2, 2) = 0.5 * Matrix::Identity(2, 2);
  lpv.parameter_names = {"p"};
  lpv.parameter_sources = {0};
  lpv.parameters = ParameterSet{{{-1.0, 1.0}}, {{-2.0, 2.0}}};
  for (int i = 0; i < m1.rows(); ++i) {
    for (int j = 0; j < m1.cols(); ++j) {
      if (m1(i, j) == 0.0) continue;
      lpv.terms.push_back({m1(i, j), i, j, Eigen::VectorXi::Ones(1)});
    }
  }
  lpv.canonicalize();
  return lpv;
}

double max_lft_deviation(const LpvModel& lpv, int points, std::uint64_t seed) {
  const auto lft = lft_realize(lpv);
  Rng rng(seed);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Vector rho = sample_in(lpv.parameters, rng);
    worst = std::max(worst, (evaluate_lft(lft, rho) - lpv.evaluate(rho)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace

TEST_CASE("default priority") {
  const Hyperrectangle unit = Hyperrectangle::symmetric(Vector::Ones(3));
  auto order = default_priority(one_block(2, 1, 0, {{2, 1}}), Hyperrectangle::symmetric(Vector::Ones(2)));
  CHECK(order == std::vector<int>{1, 0});
  order = default_priority(one_block(3, 1, 0, {{1, 1, 0}, {1, 0, 1}}), unit);
  CHECK(order[0] == 0);

  // velocity-like variables of degree one, one per monomial, next to
  // position-like variables of higher degree
  const auto basis = one_block(5, 4, 0, {{2, 0, 1, 0, 0}, {1, 1, 1, 0, 0}, {0, 2, 0, 1, 0}, {1, 2, 0, 1, 0}, {1, 0, 0, 0, 1}});
  order = default_priority(basis, Hyperrectangle::symmetric(Vector::Ones(5)));
  CHECK(order[0] == 2);
  CHECK(order[1] == 3);
  CHECK(order[2] == 4);
  DiscreteLinearModel lin;
  lin.A = Matrix::Identity(4, 4);
  lin.B = Matrix::Zero(4, 1);
  lin.C = Matrix::Zero(0, 4);
  lin.D = Matrix::Zero(0, 1);
  lin.x_op = Vector::Zero(4);
  lin.u_op = Vector::Zero(1);
  const auto model = assemble_pnlss(lin, basis, {Vector::Ones(5), Vector(), Vector(), Vector()},
                                    Hyperrectangle::symmetric(Vector::Ones(5)));
  const auto lpv = factorize(model, order);
  CHECK(lpv.parameter_sources == std::vector<int>{0, 1});
}

TEST_CASE("factorization examples") {
  auto model = hand_model(one_block(3, 2, 1, {{2, 1, 0}}), {Vector::Constant(1, 0.3), Vector(), Vector()});
  auto lpv = factorize(model, {1, 0, 2});
  REQUIRE(lpv.num_parameters() == 1);
  CHECK(lpv.parameter_sources[0] == 0);
  REQUIRE(lpv.terms.size() == 1);
  CHECK(lpv.terms[0].row == 0);
  CHECK(lpv.terms[0].col == 1);
  CHECK(lpv.terms[0].coefficient == 0.3);
  CHECK(lpv.terms[0].exponents[0] == 2);
  Vector rho(1);
  rho << 0.7;
  CHECK(lpv.evaluate(rho)(0, 1) == doctest::Approx(0.3 * 0.49));

  model = hand_model(one_block(3, 2, 1, {{1, 2, 0}}), {Vector::Ones(1), Vector(), Vector()});
  lpv = factorize(model, {0, 1, 2});
  REQUIRE(lpv.num_parameters() == 1);
  CHECK(lpv.parameter_sources[0] == 1);
  REQUIRE(lpv.terms.size() == 1);
  CHECK(lpv.terms[0].row == 0);
  CHECK(lpv.terms[0].col == 0);
  CHECK(lpv.terms[0].exponents[0] == 2);
  CHECK_THROWS_AS(factorize(model, {0, 1}), DomainError);
}

TEST_CASE("factorization is exact") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto model = test::synthetic_pnlss(3, 2, 2, 3 + static_cast<int>(seed % 2), seed);
    const auto lpv = factorize(model, default_priority(active_basis(model), model.envelope));
    Rng rng(seed + 100);
    for (int i = 0; i < 1000; ++i) {
      const Vector w = sample_in(model.envelope, rng);
      const Vector direct = model.residual(w.head(3), w.tail(2));
      const Vector factored = lpv_residual(lpv, w);
      CHECK((direct - factored).cwiseAbs().maxCoeff() < 1e-12 * (1.0 + direct.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("LFT realization reproduces the LPV model") {
  CHECK(max_lft_deviation(factorize(test::identified_pendulum(), {0, 1, 2}), 1000, 1) < 1e-10);
  const auto vdp = test::identified_van_der_pol();
  CHECK(max_lft_deviation(factorize(vdp, default_priority(active_basis(vdp), vdp.envelope)), 1000, 2) < 1e-10);
  for (std::uint64_t seed = 11; seed <= 13; ++seed) {
    const auto model = test::synthetic_pnlss(3, 1, 2, 4, seed, 0.7);
    const auto lpv = factorize(model, default_priority(active_basis(model), model.envelope));
    const auto lft = lft_realize(lpv);
    int total = 0;
    for (const auto& b : lft.blocks) total += b.repetitions;
    CHECK(total == lft.parameter_channels());
    CHECK(max_lft_deviation(lpv, 1000, seed) < 1e-10);
  }
}

TEST_CASE("rank-one dependence uses a single channel") {
  Vector left(3), right(3);
  left << 1.0, -2.0, 0.5;
  right << 0.3, 0.0, -1.2;
  const auto lpv = one_parameter_lpv(left * right.transpose());
  const auto lft = lft_realize(lpv);
  REQUIRE(lft.blocks.size() == 1);
  CHECK(lft.blocks[0].repetitions == 1);
  CHECK(max_lft_deviation(lpv, 200, 3) < 1e-12);

  Matrix full(3, 3);
  full << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  CHECK(lft_realize(one_parameter_lpv(full)).blocks[0].repetitions == 3);
}

TEST_CASE("zero residual gives an empty uncertainty block") {
  const auto model = hand_model(one_block(3, 2, 1, {{2, 1, 0}}), {Vector::Zero(1), Vector(), Vector()});
  const auto lpv = factorize(model, {0, 1, 2});
  CHECK(lpv.num_parameters() == 0);
  const auto lft = lft_realize(lpv);
  CHECK(lft.parameter_channels() == 0);
  CHECK(lft.G == lpv.base);
}

TEST_CASE("upper LFT closure") {
  const Matrix half = Matrix::Constant(1, 1, 0.5), one = Matrix::Ones(1, 1), zero = Matrix::Zero(1, 1);
  CHECK(upper_lft(half, one, one, zero, half)(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  const auto lpv = factorize(test::synthetic_pnlss(2, 1, 1, 3, 8), {0, 1, 2});
  const auto lft = lft_realize(lpv);
  CHECK((evaluate_lft(lft, Vector::Zero(lft.num_parameters())) - lpv.base).cwiseAbs().maxCoeff() == 0.0);

  LftSystem loop;
  loop.state_dim = 1;
  loop.input_dim = 1;
  loop.output_dim = 1;
  loop.G = Matrix::Zero(3, 3);
  loop.G(1, 1) = 1.0;
  loop.blocks.push_back({"p", 1, {-1, 1}, {-2, 2}});
  CHECK_THROWS_AS(evaluate_lft(loop, Vector::Ones(1)), AlgebraicLoopError);
}

TEST_CASE("LFT simulation") {
  const auto model = test::synthetic_pnlss(3, 1, 2, 3, 21);
  const auto lpv = factorize(model, default_priority(active_basis(model), model.envelope));
  const auto lft = lft_realize(lpv);
  const int l = lpv.num_parameters();
  const int steps = 60;
  Rng rng(5);
  Matrix inputs(steps, 1), params(steps, l);
  for (int k = 0; k < steps; ++k) {
    inputs(k, 0) = uniform(rng, -1, 1);
    params.row(k) = sample_in(lpv.parameters, rng).transpose();
  }
  Vector x0(3);
  x0 << 0.1, -0.2, 0.3;

  // direct recursion through the LPV matrices
  Vector x = x0;
  Matrix states(steps + 1, 3), outputs(steps, 2);
  states.row(0) = x.transpose();
  for (int k = 0; k < steps; ++k) {
    const Matrix m = lpv.evaluate(params.row(k).transpose());
    Vector w(4);
    w << x, inputs.row(k).transpose();
    const Vector next = m * w;
    outputs.row(k) = next.tail(2).transpose();
    x = next.head(3);
    states.row(k + 1) = x.transpose();
  }
  const auto traj = simulate_lft(lft, params, inputs, x0);
  CHECK((traj.states - states).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((traj.outputs - outputs).cwiseAbs().maxCoeff() < 1e-9);

  const auto nominal = simulate_lft(lft, Matrix::Zero(steps, l), inputs, x0);
  x = x0;
  for (int k = 0; k < steps; ++k) x = model.linear.A * x + model.linear.B * inputs.row(k).transpose();
  CHECK((nominal.states.row(steps).transpose() - x).cwiseAbs().maxCoeff() < 1e-12);

  const auto quiet = simulate_lft(lft, params, Matrix::Zero(steps, 1), Vector::Zero(3));
  CHECK(quiet.outputs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reduced LPV models") {
  const auto model = test::synthetic_pnlss(3, 1, 1, 3, 31);
  const auto lpv = factorize(model, default_priority(active_basis(model), model.envelope));
  const int l = lpv.num_parameters();
  const auto same = reduced_lpv(lpv, Matrix::Identity(l, l), Vector::Zero(l), lpv.parameters);
  REQUIRE(same.terms.size() == lpv.terms.size());
  for (std::size_t i = 0; i < lpv.terms.size(); ++i) {
    CHECK(same.terms[i].row == lpv.terms[i].row);
    CHECK(same.terms[i].col == lpv.terms[i].col);
    CHECK(same.terms[i].exponents == lpv.terms[i].exponents);
    CHECK(same.terms[i].coefficient == doctest::Approx(lpv.terms[i].coefficient).epsilon(1e-15));
  }

  // rho1 rho2 M with rho1 = mu, rho2 = 2 mu + 1
  LpvModel product;
  product.state_dim = 1;
  product.input_dim = 1;
  product.output_dim = 0;
  product.base = Matrix::Zero(1, 2);
  product.parameter_names = {"a", "b"};
  product.parameter_sources = {0, 1};
  Eigen::VectorXi both(2);
  both << 1, 1;
  product.terms.push_back({3.0, 0, 0, both});
  product.terms.push_back({-1.0, 0, 1, both});
  Matrix weight(2, 1);
  weight << 1.0, 2.0;
  Vector bias(2);
  bias << 0.0, 1.0;
  const ParameterSet mu_set{{{-1.0, 1.0}}, {{-2.0, 2.0}}};
  const auto expanded = reduced_lpv(product, weight, bias, mu_set);
  REQUIRE(expanded.terms.size() == 4);
  for (const auto& t : expanded.terms) {
    const double m = t.col == 0 ? 3.0 : -1.0;
    if (t.exponents[0] == 2) CHECK(t.coefficient == doctest::Approx(2.0 * m));
    else CHECK(t.coefficient == doctest::Approx(m));
  }
  CHECK_THROWS_AS(reduced_lpv(product, Matrix::Ones(3, 1), bias, mu_set), DomainError);

  Rng rng(9);
  const int m = 2;
  Matrix w = test::random_matrix(l, m, rng);
  Vector b = test::random_matrix(l, 1, rng);
  const ParameterSet set{std::vector<Interval>(m, {-1.0, 1.0}), std::vector<Interval>(m, {-2.0, 2.0})};
  const auto reduced = reduced_lpv(lpv, w, b, set);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector mu = sample_in(set, rng);
    worst = std::max(worst, (reduced.evaluate(mu) - lpv.evaluate(w * mu + b)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-10);
  CHECK(max_lft_deviation(reduced, 1000, 4) < 1e-10);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "lftkit/falsify.hpp"
#include "lftkit/systems.hpp"
#include "support.hpp"

using namespace lftkit;

namespace {

SearchSpace cube(int d) {
  SearchSpace s;
  for (int i = 0; i < d; ++i) s.scalars.push_back({-1.0, 1.0});
  return s;
}

}  // namespace

TEST_CASE("annealing on a concave bowl") {
  std::vector<double> best;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    FalsificationTask task;
    task.space = cube(5);
    task.oracle = [](const Vector& p) { return -p.squaredNorm(); };
    task.budget = 200;
    task.seed = seed;
    const auto result = optimize(task);
    CHECK(result.log.size() == 200);
    best.push_back(result.best_value);
  }
  CHECK(test::median(best) >= -0.05);
}

TEST_CASE("single evaluation and determinism") {
  FalsificationTask task;
  task.space = cube(3);
  task.oracle = [](const Vector& p) { return p.sum(); };
  task.budget = 1;
  task.seed = 4;
  const auto one = optimize(task);
  REQUIRE(one.log.size() == 1);
  CHECK(one.best_point == one.log[0].point);
  CHECK(one.best_value == one.log[0].value);

  task.budget = 150;
  const auto a = optimize(task);
  const auto b = optimize(task);
  CHECK(evaluation_log_csv(a, task.space) == evaluation_log_csv(b, task.space));
  for (const auto& r : a.log) {
    for (int i = 0; i < 3; ++i) {
      CHECK(r.point[i] >= -1.0);
      CHECK(r.point[i] <= 1.0);
    }
  }
  task.budget = 0;
  CHECK_THROWS_AS(optimize(task), DomainError);
}

TEST_CASE("failing oracle points are logged and skipped") {
  FalsificationTask task;
  task.space = cube(2);
  task.oracle = [](const Vector& p) {
    if (p[0] > 0.0) throw Error("left the envelope");
    return p[1];
  };
  task.budget = 100;
  task.seed = 2;
  const auto result = optimize(task);
  CHECK(result.log.size() == 100);
  int failed = 0;
  for (const auto& r : result.log) failed += r.failed ? 1 : 0;
  CHECK(failed > 0);
  CHECK(result.found);
  CHECK(result.best_point[0] <= 0.0);

  task.oracle = [](const Vector&) -> double { throw Error("always"); };
  CHECK_FALSE(optimize(task).found);
}

TEST_CASE("signal parametrization") {
  SearchSpace s;
  s.scalars = {{0.0, 2.0}};
  s.signals.push_back({"d", 4, {-1.0, 1.0}, Interpolation::kPiecewiseConstant});
  s.signals.push_back({"e", 3, {0.0, 1.0}, Interpolation::kLinear});
  s.horizon = 0.08;
  s.tau = 0.01;
  CHECK(s.dim() == 8);
  Vector p(8);
  p << 1.5, 0.1, 0.2, 0.3, 0.4, 0.0, 1.0, 0.0;
  const Matrix sig = s.signal_values(p);
  REQUIRE(sig.rows() == 8);
  CHECK(sig(0, 0) == 0.1);
  CHECK(sig(2, 0) == 0.2);
  CHECK(sig(7, 0) == 0.4);
  CHECK(sig(0, 1) == 0.0);
  CHECK(sig(7, 1) == doctest::Approx(0.0));
  CHECK(sig.col(1).maxCoeff() <= 1.0);
  CHECK(s.scalar_values(p)[0] == 1.5);
  s.signals[0].control_points = 0;
  CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("identical systems have a zero bound") {
  const auto sys = systems::pendulum();
  const auto lin = discrete_linear_model(sys, Vector::Zero(2), Vector::Zero(1), 0.01);
  const Matrix k = lqr_state_feedback(lin.A, lin.B, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  const auto reference = nonlinear_response(sys, lin, k, test::box3(1, 2, 2));
  SearchSpace space;
  space.signals.push_back({"d", 5, {-0.5, 0.5}});
  space.horizon = 2.0;
  const auto result = bound_dynamic_uncertainty(reference, reference, space, 20, 1.25, {}, 3);
  CHECK(result.raw_maximum < 1e-9);
  CHECK(result.bound == 1.25 * result.raw_maximum);
  CHECK_THROWS_AS(bound_dynamic_uncertainty(reference, reference, space, 20, 0.5), DomainError);
  CHECK_THROWS_AS(error_gain_ratio(reference, reference, Matrix::Zero(10, 1)), DomainError);
}

TEST_CASE("first-order filter benchmark") {
  const auto bench = test::filter_benchmark();
  std::vector<double> annealed, random;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto result = bound_dynamic_uncertainty(bench.reference, bench.model, bench.space, 500, 1.25, {}, seed);
    CHECK(result.raw_maximum <= bench.hinf() * (1 + 1e-12));
    annealed.push_back(result.raw_maximum);
    FalsificationTask task;
    task.space = bench.space;
    task.budget = 500;
    task.seed = seed + 1000;
    task.oracle = [&](const Vector& p) {
      return error_gain_ratio(bench.reference, bench.model, bench.space.signal_values(p));
    };
    random.push_back(random_search(task).best_value);
  }
  const double m = test::median(annealed);
  MESSAGE("annealing median " << m << ", random median " << test::median(random) << ", analytic " << bench.hinf());
  CHECK(std::abs(m - bench.hinf()) <= 0.1 * bench.hinf());
  CHECK(m >= test::median(random));
}

TEST_CASE("spread metric and run samples") {
  const Hyperrectangle box = test::box3(1, 1, 1);
  Trajectory still;
  still.tau = 0.01;
  still.states = Matrix::Zero(11, 2);
  still.inputs = Matrix::Zero(10, 1);
  CHECK(spread_metric(still, box) == 0.0);

  Trajectory run = still;
  for (int k = 0; k <= 10; ++k) run.states.row(k) << 0.2 * k, 0.1;
  // steps 0..4 lie inside (0.2 k <= 1), later ones leave the box
  double expected = 0.0;
  for (int k = 0; k <= 5; ++k) expected += 0.04 * k * k + 0.01;
  CHECK(spread_metric(run, box) == doctest::Approx(expected));
  CHECK(run_samples(run, box, 1).rows() == 6);
  CHECK(run_samples(run, box, 2).rows() == 3);
}

TEST_CASE("greedy coverage selection") {
  Rng rng(12);
  std::vector<Matrix> groups;
  for (int g = 0; g < 40; ++g) {
    // each run is a short cluster somewhere in the unit square
    const double cx = uniform01(rng), cy = uniform01(rng);
    Matrix pts(15, 2);
    for (int i = 0; i < 15; ++i) {
      pts(i, 0) = std::clamp(cx + 0.05 * standard_normal(rng), 0.0, 1.0);
      pts(i, 1) = std::clamp(cy + 0.05 * standard_normal(rng), 0.0, 1.0);
    }
    groups.push_back(pts);
  }
  std::vector<double> history;
  const auto chosen = greedy_ml2_selection(groups, 150, &history);
  REQUIRE(!chosen.empty());
  CHECK(history.size() == chosen.size());
  for (std::size_t i = 1; i < history.size(); ++i) CHECK(history[i] <= history[i - 1]);

  auto stack = [&](const std::vector<int>& ids) {
    Matrix all(0, 2);
    for (int id : ids) {
      Matrix next(all.rows() + 15, 2);
      next << all, groups[static_cast<std::size_t>(id)];
      all = next;
    }
    return all;
  };
  CHECK(history.back() == doctest::Approx(ml2_discrepancy(stack(chosen))).epsilon(1e-10));
  std::vector<double> random;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> ids(40);
    for (int i = 0; i < 40; ++i) ids[static_cast<std::size_t>(i)] = i;
    shuffle(ids.begin(), ids.end(), rng);
    ids.resize(chosen.size());
    random.push_back(ml2_discrepancy(stack(ids)));
  }
  CHECK(history.back() <= test::median(random));
}

TEST_CASE("coverage data generation") {
  const auto sys = systems::pendulum();
  const auto lin = discrete_linear_model(sys, Vector::Zero(2), Vector::Zero(1), 0.01);
  const Matrix k = lqr_state_feedback(lin.A, lin.B, Matrix::Identity(2, 2), Matrix::Identity(1, 1));
  const auto box = test::box3(1, 2, 2);
  SearchSpace space;
  space.scalars = {{-1.0, 1.0}, {-2.0, 2.0}};
  space.signals.push_back({"d", 5, {-2.0, 2.0}});
  space.horizon = 2.0;
  auto simulate = [&](const Vector& p) {
    return simulate_nonlinear_closed_loop(sys, lin, k, space.scalar_values(p), space.signal_values(p));
  };
  CoverageConfig cfg;
  cfg.budget = 30;
  cfg.target_samples = 500;
  cfg.stride = 2;
  cfg.seed = 5;
  const auto result = generate_coverage_data(simulate, box, space, cfg);
  CHECK(result.database_runs > 0);
  CHECK(result.data.size() > 0);
  CHECK(result.run_spread.size() == 30);
  for (long i = 0; i < result.data.size(); ++i) CHECK(box.contains(result.data.samples.row(i).transpose()));
  for (std::size_t i = 1; i < result.ml2_history.size(); ++i) CHECK(result.ml2_history[i] <= result.ml2_history[i - 1]);

  cfg.min_spread = 1e12;
  CHECK_THROWS_AS(generate_coverage_data(simulate, box, space, cfg), InsufficientCoverageError);
}

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lftkit/cfnn.hpp"
#include "lftkit/dynamics.hpp"
#include "lftkit/envelope.hpp"
#include "lftkit/lft_system.hpp"

namespace lftkit {

enum class Interpolation { kPiecewiseConstant, kLinear };

struct SignalChannel {
  std::string name;
  int control_points = 10;
  Interval bounds;
  Interpolation interpolation = Interpolation::kPiecewiseConstant;
};

/// Box of scalar dimensions followed by the control points of each signal
/// channel (channel-major).
struct SearchSpace {
  std::vector<std::string> scalar_names;
  std::vector<Interval> scalars;
  std::vector<SignalChannel> signals;
  double horizon = 30.0;  ///< seconds
  double tau = 0.01;

  int dim() const;
  long steps() const;
  void validate() const;
  Vector lower() const;
  Vector upper() const;
  /// Unit-cube point -> physical point.
  Vector from_unit(const Vector& unit) const;
  /// Scalar part of a physical point.
  Vector scalar_values(const Vector& point) const;
  /// Signal part of a physical point sampled at every step (steps x channels).
  Matrix signal_values(const Vector& point) const;
};

struct AnnealingConfig {
  int restarts = 5;            ///< uniform restart every budget / restarts evaluations
  double initial_step = 0.3;   ///< proposal scale in unit-cube coordinates
  double final_step = 0.01;
  double initial_temperature = 0.1;  ///< relative to |best value|
  double final_temperature = 1e-3;
};

struct FalsificationTask {
  SearchSpace space;
  /// Deterministic objective to maximize; throwing lftkit::Error or
  /// returning a non-finite value marks the point as failed.
  std::function<double(const Vector&)> oracle;
  int budget = 200;
  AnnealingConfig annealing;
  std::uint64_t seed = 0;
};

struct EvaluationRecord {
  int restart = 0;
  Vector point;
  double value = 0.0;  ///< NaN for failed points
  bool accepted = false;
  bool failed = false;
  std::string message;
};

struct FalsificationResult {
  Vector best_point;
  double best_value = 0.0;
  bool found = false;  ///< false when every evaluation failed
  std::vector<EvaluationRecord> log;
};

/// Simulated annealing on the unit-normalized search box.
FalsificationResult optimize(const FalsificationTask& task);

/// Same budget spent on independent uniform points (baseline).
FalsificationResult random_search(const FalsificationTask& task);

/// Evaluation log as CSV: index, restart, coordinates, value, accepted, failed.
std::string evaluation_log_csv(const FalsificationResult& result, const SearchSpace& space);

/// Closed-loop histories driven by one disturbance history.
struct Response {
  Matrix outputs;  ///< steps x n_y
  Matrix inputs;   ///< steps x n_u, plant input ū = -K x̄ + d
};

/// Maps a disturbance history (steps x n_u) to the closed-loop response.
using ResponseMap = std::function<Response(const Matrix&)>;

struct BoundResult {
  double bound = 0.0;        ///< raw maximum times the safety factor
  double raw_maximum = 0.0;
  double safety_factor = 1.25;
  FalsificationResult search;
};

/// ||y_ref - y_model||_2 / ||ū_ref||_2 for one disturbance history, with
/// ū_ref the plant input of the reference loop.
double error_gain_ratio(const ResponseMap& reference, const ResponseMap& model,
                        const Matrix& disturbance);

/// Maximizes the error-to-input ratio over the signal part of
/// `space` (scalars are ignored: initial conditions are zero).
BoundResult bound_dynamic_uncertainty(const ResponseMap& reference, const ResponseMap& model,
                                      const SearchSpace& space, int budget,
                                      double safety_factor = 1.25,
                                      const AnnealingConfig& annealing = {},
                                      std::uint64_t seed = 0);

/// Closed-loop nonlinear plant under u = -K x̄ + d from x̄(0) = 0. Leaving
/// `envelope` (if non-empty) raises lftkit::Error.
ResponseMap nonlinear_response(const NonlinearSystem& sys, const DiscreteLinearModel& lin,
                               const Matrix& gain, const Hyperrectangle& envelope,
                               int substeps = kDefaultSubsteps);

/// Closed-loop LFT under u = -K x̄ + d from x̄(0) = 0, with the parameters
/// obtained from w = (x̄, ū) by `scheduler`.
ResponseMap lft_response(const LftSystem& lft, const Matrix& gain,
                         std::function<Vector(const Vector&)> scheduler);

/// sum over in-envelope samples of ||x̄||^2 (out-of-envelope rows removed).
double spread_metric(const Trajectory& run, const Hyperrectangle& envelope);

struct CoverageConfig {
  int budget = 200;
  double min_spread = 0.0;  ///< L_v
  long target_samples = 2000;
  int stride = 1;  ///< keep every stride-th in-envelope sample of a run
  AnnealingConfig annealing;
  std::uint64_t seed = 0;
};

struct CoverageResult {
  TrainingSet data;
  FalsificationResult search;
  int database_runs = 0;
  std::vector<int> selected_runs;     ///< database indices in selection order
  std::vector<double> ml2_history;    ///< discrepancy after each selection
  std::vector<double> run_spread;     ///< V_i per evaluation (NaN if failed)
};

/// Runs `simulate(point)` under the falsification search maximizing the
/// spread metric, keeps runs with V_i >= L_v, then greedily adds whole runs
/// that most decrease the ML2 discrepancy of the normalized sample cloud.
/// Throws InsufficientCoverageError if no run qualifies.
CoverageResult generate_coverage_data(const std::function<Trajectory(const Vector&)>& simulate,
                                      const Hyperrectangle& envelope, const SearchSpace& space,
                                      const CoverageConfig& config);

/// In-envelope (x̄, ū) rows of a run, every stride-th kept.
Matrix run_samples(const Trajectory& run, const Hyperrectangle& envelope, int stride);

/// Greedy ML2 selection over precomputed unit-cube groups. Returns chosen
/// group indices; `history` receives the discrepancy after each choice.
std::vector<int> greedy_ml2_selection(const std::vector<Matrix>& groups, long target_samples,
                                      std::vector<double>* history = nullptr);

}  // namespace lftkit

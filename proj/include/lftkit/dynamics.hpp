#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lftkit/common.hpp"

namespace lftkit {

/// Continuous-time nonlinear plant  x' = f(x, u),  y = h(x, u).
struct NonlinearSystem {
  using Field = std::function<Vector(const Vector&, const Vector&)>;
  /// Returns the pair (d/dx, d/du) of a field.
  using Jacobian = std::function<std::pair<Matrix, Matrix>(const Vector&, const Vector&)>;

  std::string name;
  int state_dim = 0;
  int input_dim = 0;
  int output_dim = 0;
  Field f;
  Field h;
  Jacobian jacobian_f;  // optional
  Jacobian jacobian_h;  // optional
  std::vector<std::string> state_labels;
  std::vector<std::string> input_labels;
  /// Variables (indices into [x; u]) appearing in each state equation and
  /// each output equation. Empty means "detect numerically".
  std::vector<std::vector<int>> equation_variables;
};

struct ContinuousLinearization {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
};

/// Zero-order-hold sampled linearization about (x*, u*).
struct DiscreteLinearModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  double tau = 0.0;
  Vector x_op;
  Vector u_op;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
  int output_dim() const { return static_cast<int>(C.rows()); }
};

/// Jacobians at (x*, u*): analytic when the system provides them, otherwise
/// central differences with step max(1e-6, 1e-6 |coordinate|).
ContinuousLinearization linearize(const NonlinearSystem& sys, const Vector& x_op,
                                  const Vector& u_op);

/// (A_d, B_d) from the exponential of [[A, B], [0, 0]] * tau.
std::pair<Matrix, Matrix> discretize_zoh(const Matrix& a, const Matrix& b, double tau);

/// linearize + discretize_zoh, keeping C and D from the output Jacobians.
DiscreteLinearModel discrete_linear_model(const NonlinearSystem& sys, const Vector& x_op,
                                          const Vector& u_op, double tau);

/// Sampled trajectory; row k of each matrix is the value at t = k * tau.
/// `states` has one more row than `inputs` and `outputs`.
struct Trajectory {
  double tau = 0.0;
  Matrix states;
  Matrix inputs;
  Matrix outputs;

  long steps() const { return static_cast<long>(inputs.rows()); }
};

inline constexpr double kDivergenceThreshold = 1e9;
inline constexpr int kDefaultSubsteps = 20;

/// One sampling interval of fixed-step RK4 with the input held constant.
Vector rk4_interval(const NonlinearSystem& sys, const Vector& x, const Vector& u,
                    double tau, int substeps = kDefaultSubsteps);

/// Open-loop simulation. Row k of `inputs` is held over [k tau, (k+1) tau).
/// Outputs are sampled at the start of each interval.
Trajectory simulate_nonlinear(const NonlinearSystem& sys, const Vector& x0,
                              const Matrix& inputs, double tau,
                              int substeps = kDefaultSubsteps);

/// Closed-loop simulation about the operating point with state feedback
/// u = u* - K (x - x*) + d. Trajectory holds deviations (x̄, ū, ȳ).
/// When `stop_outside` is set the run ends at the first sample outside it.
Trajectory simulate_nonlinear_closed_loop(
    const NonlinearSystem& sys, const DiscreteLinearModel& lin, const Matrix& gain,
    const Vector& x0_dev, const Matrix& disturbance,
    int substeps = kDefaultSubsteps,
    const std::function<bool(const Vector&, const Vector&)>& stop_outside = {});

/// Discrete LQR via the Riccati difference equation, iterated until the
/// change in P drops below 1e-10. Returns K with u = -K x.
Matrix lqr_state_feedback(const Matrix& a, const Matrix& b, const Matrix& q,
                          const Matrix& r);

/// Writes a trajectory as CSV: time, states, inputs, outputs.
std::string trajectory_csv(const Trajectory& traj,
                           const std::vector<std::string>& state_labels = {},
                           const std::vector<std::string>& input_labels = {});

}  // namespace lftkit

#include "lftkit/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace lftkit {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

std::pair<Matrix, Matrix> central_difference(const NonlinearSystem::Field& field,
                                             const Vector& x, const Vector& u,
                                             int rows) {
  Matrix dx(rows, x.size());
  Matrix du(rows, u.size());
  auto column = [&](Vector xp, Vector up, Vector xm, Vector um, double h) {
    return Vector((field(xp, up) - field(xm, um)) / (2.0 * h));
  };
  for (int i = 0; i < x.size(); ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(x[i]));
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    dx.col(i) = column(xp, u, xm, u, h);
  }
  for (int i = 0; i < u.size(); ++i) {
    const double h = std::max(1e-6, 1e-6 * std::abs(u[i]));
    Vector up = u, um = u;
    up[i] += h;
    um[i] -= h;
    du.col(i) = column(x, up, x, um, h);
  }
  return {dx, du};
}

void check_divergence(const Vector& x, double t) {
  if (!x.allFinite() || x.norm() > kDivergenceThreshold) {
    std::ostringstream os;
    os << "simulation diverged at t = " << t;
    throw DivergenceError(os.str(), t);
  }
}

}  // namespace

ContinuousLinearization linearize(const NonlinearSystem& sys, const Vector& x_op,
                                  const Vector& u_op) {
  if (x_op.size() != sys.state_dim || u_op.size() != sys.input_dim) {
    throw DomainError("linearize: operating point dimension mismatch");
  }
  if (!sys.f(x_op, u_op).allFinite()) {
    throw LinearizationError("linearize: f is not finite at the operating point");
  }
  ContinuousLinearization lin;
  std::tie(lin.A, lin.B) = sys.jacobian_f
                               ? sys.jacobian_f(x_op, u_op)
                               : central_difference(sys.f, x_op, u_op, sys.state_dim);
  std::tie(lin.C, lin.D) = sys.jacobian_h
                               ? sys.jacobian_h(x_op, u_op)
                               : central_difference(sys.h, x_op, u_op, sys.output_dim);
  if (!all_finite(lin.A) || !all_finite(lin.B) || !all_finite(lin.C) || !all_finite(lin.D)) {
    throw LinearizationError("linearize: non-finite derivative");
  }
  return lin;
}

std::pair<Matrix, Matrix> discretize_zoh(const Matrix& a, const Matrix& b, double tau) {
  if (!(tau > 0.0)) throw DomainError("discretize_zoh: tau must be positive");
  const auto n = a.rows();
  const auto m = b.cols();
  // M = [A  B]    exp(M tau) = [A_d  B_d]
  //     [0  0]                 [ 0    I ]
  Matrix big = Matrix::Zero(n + m, n + m);
  big.topLeftCorner(n, n) = a;
  big.topRightCorner(n, m) = b;
  const Matrix phi = (big * tau).exp();
  return {phi.topLeftCorner(n, n), phi.topRightCorner(n, m)};
}

DiscreteLinearModel discrete_linear_model(const NonlinearSystem& sys, const Vector& x_op,
                                          const Vector& u_op, double tau) {
  const auto cont = linearize(sys, x_op, u_op);
  DiscreteLinearModel model;
  std::tie(model.A, model.B) = discretize_zoh(cont.A, cont.B, tau);
  model.C = cont.C;
  model.D = cont.D;
  model.tau = tau;
  model.x_op = x_op;
  model.u_op = u_op;
  return model;
}

Vector rk4_interval(const NonlinearSystem& sys, const Vector& x, const Vector& u,
                    double tau, int substeps) {
  const double h = tau / substeps;
  Vector state = x;
  for (int s = 0; s < substeps; ++s) {
    const Vector k1 = sys.f(state, u);
    const Vector k2 = sys.f(state + 0.5 * h * k1, u);
    const Vector k3 = sys.f(state + 0.5 * h * k2, u);
    const Vector k4 = sys.f(state + h * k3, u);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return state;
}

Trajectory simulate_nonlinear(const NonlinearSystem& sys, const Vector& x0,
                              const Matrix& inputs, double tau, int substeps) {
  if (!(tau > 0.0) || substeps < 1) throw DomainError("simulate: invalid step");
  if (x0.size() != sys.state_dim || inputs.cols() != sys.input_dim) {
    throw DomainError("simulate: dimension mismatch");
  }
  const auto steps = inputs.rows();
  Trajectory traj;
  traj.tau = tau;
  traj.states.resize(steps + 1, sys.state_dim);
  traj.inputs = inputs;
  traj.outputs.resize(steps, sys.output_dim);
  Vector x = x0;
  traj.states.row(0) = x.transpose();
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Vector u = inputs.row(k).transpose();
    traj.outputs.row(k) = sys.h(x, u).transpose();
    x = rk4_interval(sys, x, u, tau, substeps);
    check_divergence(x, static_cast<double>(k + 1) * tau);
    traj.states.row(k + 1) = x.transpose();
  }
  return traj;
}

Trajectory simulate_nonlinear_closed_loop(
    const NonlinearSystem& sys, const DiscreteLinearModel& lin, const Matrix& gain,
    const Vector& x0_dev, const Matrix& disturbance, int substeps,
    const std::function<bool(const Vector&, const Vector&)>& stop_outside) {
  const auto steps = disturbance.rows();
  const Vector y_op = sys.h(lin.x_op, lin.u_op);
  Trajectory traj;
  traj.tau = lin.tau;
  traj.states.resize(steps + 1, sys.state_dim);
  traj.inputs.resize(steps, sys.input_dim);
  traj.outputs.resize(steps, sys.output_dim);
  Vector x = lin.x_op + x0_dev;
  traj.states.row(0) = x0_dev.transpose();
  Eigen::Index k = 0;
  for (; k < steps; ++k) {
    const Vector x_dev = x - lin.x_op;
    const Vector u_dev = -gain * x_dev + disturbance.row(k).transpose();
    if (stop_outside && stop_outside(x_dev, u_dev)) break;
    const Vector u = lin.u_op + u_dev;
    traj.inputs.row(k) = u_dev.transpose();
    traj.outputs.row(k) = (sys.h(x, u) - y_op).transpose();
    x = rk4_interval(sys, x, u, lin.tau, substeps);
    check_divergence(x, static_cast<double>(k + 1) * lin.tau);
    traj.states.row(k + 1) = (x - lin.x_op).transpose();
  }
  if (k < steps) {
    traj.states.conservativeResize(k + 1, Eigen::NoChange);
    traj.inputs.conservativeResize(k, Eigen::NoChange);
    traj.outputs.conservativeResize(k, Eigen::NoChange);
  }
  return traj;
}

Matrix lqr_state_feedback(const Matrix& a, const Matrix& b, const Matrix& q,
                          const Matrix& r) {
  const auto n = a.rows();
  if (a.cols() != n || b.rows() != n || q.rows() != n || r.rows() != b.cols()) {
    throw DomainError("lqr: dimension mismatch");
  }
  Eigen::LLT<Matrix> r_chol(r);
  if (r_chol.info() != Eigen::Success) throw DomainError("lqr: R must be positive definite");

  constexpr int kMaxIterations = 100000;
  Matrix p = q;
  bool converged = false;
  for (int it = 0; it < kMaxIterations; ++it) {
    const Matrix bt_p = b.transpose() * p;
    const Matrix gain = (r + bt_p * b).ldlt().solve(bt_p * a);
    Matrix next = q + a.transpose() * p * a - a.transpose() * p * b * gain;
    next = 0.5 * (next + next.transpose());
    const double change = (next - p).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, next.cwiseAbs().maxCoeff());
    p = std::move(next);
    if (!p.allFinite()) break;
    if (change < 1e-10 * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw StabilizabilityError("lqr: Riccati iteration did not converge");
  }
  const Matrix bt_p = b.transpose() * p;
  Matrix k = (r + bt_p * b).ldlt().solve(bt_p * a);
  const double rho = spectral_radius(a - b * k);
  if (!(rho < 1.0)) {
    std::ostringstream os;
    os << "lqr: closed loop not Schur stable (spectral radius " << rho << ")";
    throw StabilizabilityError(os.str());
  }
  return k;
}

std::string trajectory_csv(const Trajectory& traj,
                           const std::vector<std::string>& state_labels,
                           const std::vector<std::string>& input_labels) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "time";
  for (int i = 0; i < traj.states.cols(); ++i) {
    os << "," << (i < static_cast<int>(state_labels.size()) ? state_labels[i]
                                                            : "x" + std::to_string(i + 1));
  }
  for (int i = 0; i < traj.inputs.cols(); ++i) {
    os << "," << (i < static_cast<int>(input_labels.size()) ? input_labels[i]
                                                            : "u" + std::to_string(i + 1));
  }
  for (int i = 0; i < traj.outputs.cols(); ++i) os << ",y" << i + 1;
  os << "\n";
  for (long k = 0; k < traj.steps(); ++k) {
    os << static_cast<double>(k) * traj.tau;
    for (int i = 0; i < traj.states.cols(); ++i) os << "," << traj.states(k, i);
    for (int i = 0; i < traj.inputs.cols(); ++i) os << "," << traj.inputs(k, i);
    for (int i = 0; i < traj.outputs.cols(); ++i) os << "," << traj.outputs(k, i);
    os << "\n";
  }
  return os.str();
}

}  // namespace lftkit

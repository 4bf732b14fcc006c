#include "lftkit/lft_system.hpp"

#include <sstream>

#include "lftkit/dynamics.hpp"

namespace lftkit {

namespace {

// theta = (I - Delta A_pp)^{-1} Delta phi_0 with phi_0 = A_ps x + B_p u.
Vector close_parameter_loop(const Matrix& a_pp, const Vector& delta, const Vector& phi0,
                            long step) {
  const auto n = delta.size();
  if (n == 0) return Vector();
  const Matrix loop = Matrix::Identity(n, n) - delta.asDiagonal() * a_pp;
  Eigen::PartialPivLU<Matrix> lu(loop);
  const double det = std::abs(lu.determinant());
  if (!(det > 1e-14)) {
    std::ostringstream os;
    os << "LFT loop matrix (I - Delta G11) is singular";
    if (step >= 0) os << " at step " << step;
    throw AlgebraicLoopError(os.str(), step);
  }
  return lu.solve(delta.cwiseProduct(phi0));
}

struct ParameterPartition {
  Matrix a_ss, a_sp, b_s, a_ps, a_pp, b_p, c_s, c_p, d;
};

// Parameter channels only; dynamic-block rows/columns are dropped (Delta_E = 0).
ParameterPartition parameter_partition(const LftSystem& lft) {
  const int n = lft.state_dim;
  const int r = lft.parameter_channels();
  const int tp = lft.theta_dim();
  const int pp = lft.phi_dim();
  ParameterPartition p;
  p.a_ss = lft.G.block(0, 0, n, n);
  p.a_sp = lft.G.block(0, n, n, r);
  p.b_s = lft.G.block(0, n + tp, n, lft.input_dim);
  p.a_ps = lft.G.block(n, 0, r, n);
  p.a_pp = lft.G.block(n, n, r, r);
  p.b_p = lft.G.block(n, n + tp, r, lft.input_dim);
  p.c_s = lft.G.block(n + pp, 0, lft.output_dim, n);
  p.c_p = lft.G.block(n + pp, n, lft.output_dim, r);
  p.d = lft.G.block(n + pp, n + tp, lft.output_dim, lft.input_dim);
  return p;
}

}  // namespace

int LftSystem::parameter_channels() const {
  int total = 0;
  for (const auto& b : blocks) total += b.repetitions;
  return total;
}

int LftSystem::phi_dim() const {
  return parameter_channels() + (dynamic ? dynamic->input_dim : 0);
}

int LftSystem::theta_dim() const {
  return parameter_channels() + (dynamic ? dynamic->output_dim : 0);
}

Matrix LftSystem::nominal() const {
  Matrix m(state_dim + output_dim, state_dim + input_dim);
  m << a_ss(), b_s(), c_s(), d();
  return m;
}

Vector LftSystem::delta_diagonal(const Vector& parameters) const {
  if (parameters.size() != num_parameters()) {
    throw DomainError("LFT: expected " + std::to_string(num_parameters()) + " parameter values");
  }
  Vector diag(parameter_channels());
  int offset = 0;
  for (int i = 0; i < num_parameters(); ++i) {
    const int r = blocks[static_cast<std::size_t>(i)].repetitions;
    diag.segment(offset, r).setConstant(parameters[i]);
    offset += r;
  }
  return diag;
}

void LftSystem::validate() const {
  const int rows = state_dim + phi_dim() + output_dim;
  const int cols = state_dim + theta_dim() + input_dim;
  if (G.rows() != rows || G.cols() != cols) {
    std::ostringstream os;
    os << "LFT: G is " << G.rows() << "x" << G.cols() << ", expected " << rows << "x" << cols;
    throw DomainError(os.str());
  }
  for (const auto& b : blocks) {
    if (b.repetitions < 0) throw DomainError("LFT: negative repetition count");
    if (b.value_bounds.lo > b.value_bounds.hi) throw DomainError("LFT: inverted value bound");
  }
  if (dynamic && dynamic->bound < 0.0) throw DomainError("LFT: negative dynamic bound");
}

Matrix upper_lft(const Matrix& g11, const Matrix& g12, const Matrix& g21, const Matrix& g22,
                 const Matrix& delta) {
  const auto n = g11.rows();
  if (n == 0) return g22;
  const Matrix loop = Matrix::Identity(n, n) - g11 * delta;
  Eigen::FullPivLU<Matrix> lu(loop);
  if (!lu.isInvertible()) throw AlgebraicLoopError("upper LFT: singular loop", -1);
  return g22 + g21 * delta * lu.solve(g12);
}

Matrix evaluate_lft(const LftSystem& lft, const Vector& parameters) {
  const auto p = parameter_partition(lft);
  const Vector delta = lft.delta_diagonal(parameters);
  Matrix m(lft.state_dim + lft.output_dim, lft.state_dim + lft.input_dim);
  m << p.a_ss, p.b_s, p.c_s, p.d;
  const auto r = delta.size();
  if (r == 0) return m;
  const Matrix loop = Matrix::Identity(r, r) - delta.asDiagonal() * p.a_pp;
  Eigen::FullPivLU<Matrix> lu(loop);
  if (!lu.isInvertible()) throw AlgebraicLoopError("evaluate_lft: singular loop matrix", -1);
  Matrix into(r, lft.state_dim + lft.input_dim);
  into << p.a_ps, p.b_p;
  Matrix out(lft.state_dim + lft.output_dim, r);
  out << p.a_sp, p.c_p;
  return m + out * lu.solve(delta.asDiagonal() * into);
}

LftSystem attach_output_uncertainty(const LftSystem& lft, double bound) {
  if (lft.dynamic) throw DomainError("LFT already carries a dynamic block");
  LftSystem out = lft;
  out.dynamic = DynamicBlock{bound, lft.input_dim, lft.output_dim};
  const int n = lft.state_dim;
  const int r = lft.parameter_channels();
  const int nu = lft.input_dim;
  const int ny = lft.output_dim;
  // Old layout: rows [x, phi_r, y], cols [x, theta_r, u].
  // New layout: rows [x, phi_r, phi_E(nu), y], cols [x, theta_r, theta_E(ny), u].
  Matrix g = Matrix::Zero(n + r + nu + ny, n + r + ny + nu);
  const Matrix& old = lft.G;
  auto copy_cols = [&](int old_row, int new_row, int count) {
    g.block(new_row, 0, count, n + r) = old.block(old_row, 0, count, n + r);
    g.block(new_row, n + r + ny, count, nu) = old.block(old_row, n + r, count, nu);
  };
  copy_cols(0, 0, n + r);
  copy_cols(n + r, n + r + nu, ny);
  g.block(n + r, n + r + ny, nu, nu).setIdentity();  // phi_E = u
  g.block(n + r + nu, n + r, ny, ny).setIdentity();  // y += theta_E
  out.G = std::move(g);
  return out;
}

LftTrajectory simulate_lft(const LftSystem& lft, const Matrix& parameter_trajectory,
                           const Matrix& input_trajectory, const Vector& x0) {
  const auto steps = input_trajectory.rows();
  if (parameter_trajectory.rows() != steps && lft.num_parameters() > 0) {
    throw DomainError("simulate_lft: parameter and input trajectories differ in length");
  }
  if (x0.size() != lft.state_dim || input_trajectory.cols() != lft.input_dim) {
    throw DomainError("simulate_lft: dimension mismatch");
  }
  const auto p = parameter_partition(lft);
  LftTrajectory traj;
  traj.states.resize(steps + 1, lft.state_dim);
  traj.outputs.resize(steps, lft.output_dim);
  Vector x = x0;
  traj.states.row(0) = x.transpose();
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Vector u = input_trajectory.row(k).transpose();
    Vector next = p.a_ss * x + p.b_s * u;
    Vector y = p.c_s * x + p.d * u;
    if (lft.num_parameters() > 0) {
      const Vector delta = lft.delta_diagonal(parameter_trajectory.row(k).transpose());
      const Vector theta = close_parameter_loop(p.a_pp, delta, p.a_ps * x + p.b_p * u, k);
      next += p.a_sp * theta;
      y += p.c_p * theta;
    }
    traj.outputs.row(k) = y.transpose();
    x = std::move(next);
    traj.states.row(k + 1) = x.transpose();
  }
  return traj;
}

LftTrajectory simulate_lft_closed_loop(
    const LftSystem& lft, const std::function<Vector(const Vector&, const Vector&)>& scheduler,
    const Matrix& gain, const Matrix& disturbance, const Vector& x0) {
  const auto steps = disturbance.rows();
  const auto p = parameter_partition(lft);
  LftTrajectory traj;
  traj.states.resize(steps + 1, lft.state_dim);
  traj.outputs.resize(steps, lft.output_dim);
  Vector x = x0;
  traj.states.row(0) = x.transpose();
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Vector u = -gain * x + disturbance.row(k).transpose();
    Vector next = p.a_ss * x + p.b_s * u;
    Vector y = p.c_s * x + p.d * u;
    if (lft.num_parameters() > 0) {
      const Vector delta = lft.delta_diagonal(scheduler(x, u));
      const Vector theta = close_parameter_loop(p.a_pp, delta, p.a_ps * x + p.b_p * u, k);
      next += p.a_sp * theta;
      y += p.c_p * theta;
    }
    if (!next.allFinite() || next.norm() > kDivergenceThreshold) {
      throw DivergenceError("LFT simulation diverged at step " + std::to_string(k),
                            static_cast<double>(k + 1));
    }
    traj.outputs.row(k) = y.transpose();
    x = std::move(next);
    traj.states.row(k + 1) = x.transpose();
  }
  return traj;
}

}  // namespace lftkit

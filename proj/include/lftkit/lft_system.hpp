#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lftkit/common.hpp"
#include "lftkit/envelope.hpp"

namespace lftkit {

/// Repeated-scalar block rho_i I_r of the perturbation operator.
struct UncertaintyBlock {
  std::string name;
  int repetitions = 0;
  Interval value_bounds;
  Interval rate_bounds;
};

/// Norm-bounded full block appended after the parameter channels.
struct DynamicBlock {
  double bound = 0.0;
  int input_dim = 0;   ///< rows of phi feeding the block
  int output_dim = 0;  ///< columns of theta leaving the block
};

/// Discrete-time LFT
///   [x⁺; phi; y] = G [x; theta; u],   theta = Delta phi,
/// with G partitioned as [A_ss A_sp B_s; A_ps A_pp B_p; C_s C_p D] and
/// Delta = diag(rho_1 I_r1, ..., rho_l I_rl, Delta_E).
struct LftSystem {
  int state_dim = 0;
  int input_dim = 0;
  int output_dim = 0;
  Matrix G;
  std::vector<UncertaintyBlock> blocks;
  std::optional<DynamicBlock> dynamic;

  int parameter_channels() const;
  /// Number of phi rows (parameter channels plus dynamic-block inputs).
  int phi_dim() const;
  /// Number of theta columns (parameter channels plus dynamic-block outputs).
  int theta_dim() const;
  int num_parameters() const { return static_cast<int>(blocks.size()); }

  Matrix a_ss() const { return G.block(0, 0, state_dim, state_dim); }
  Matrix a_sp() const { return G.block(0, state_dim, state_dim, theta_dim()); }
  Matrix b_s() const { return G.block(0, state_dim + theta_dim(), state_dim, input_dim); }
  Matrix a_ps() const { return G.block(state_dim, 0, phi_dim(), state_dim); }
  Matrix a_pp() const { return G.block(state_dim, state_dim, phi_dim(), theta_dim()); }
  Matrix b_p() const { return G.block(state_dim, state_dim + theta_dim(), phi_dim(), input_dim); }
  Matrix c_s() const { return G.block(state_dim + phi_dim(), 0, output_dim, state_dim); }
  Matrix c_p() const { return G.block(state_dim + phi_dim(), state_dim, output_dim, theta_dim()); }
  Matrix d() const {
    return G.block(state_dim + phi_dim(), state_dim + theta_dim(), output_dim, input_dim);
  }

  /// Nominal matrix [A_ss B_s; C_s D].
  Matrix nominal() const;

  /// Diagonal of Delta for the parameter channels (dynamic block excluded).
  Vector delta_diagonal(const Vector& parameters) const;

  /// Throws DomainError when dimensions and block descriptors disagree.
  void validate() const;
};

/// Closed-loop matrix [A(rho) B(rho); C(rho) D(rho)] obtained by closing the
/// parameter channels with Delta = diag(rho_i I_ri); any dynamic block is
/// set to zero. Throws AlgebraicLoopError when (I - Delta A_pp) is singular.
Matrix evaluate_lft(const LftSystem& lft, const Vector& parameters);

/// Static upper LFT  G22 + G21 Delta (I - G11 Delta)^{-1} G12  for a plain
/// partitioned matrix with an explicit (possibly full) Delta.
Matrix upper_lft(const Matrix& g11, const Matrix& g12, const Matrix& g21, const Matrix& g22,
                 const Matrix& delta);

/// Appends a full block of the given norm bound mapping the input u to an
/// additive perturbation of the output y.
LftSystem attach_output_uncertainty(const LftSystem& lft, double bound);

/// Simulation result of an LFT in discrete time; rows are time steps.
struct LftTrajectory {
  Matrix states;   ///< steps + 1 rows
  Matrix outputs;  ///< steps rows
};

/// Steps the LFT along a given parameter trajectory (one row of parameter
/// values per step), closing theta = Delta(k) phi exactly at each step.
LftTrajectory simulate_lft(const LftSystem& lft, const Matrix& parameter_trajectory,
                           const Matrix& input_trajectory, const Vector& x0);

/// Closed-loop quasi-LPV simulation: at each step the input is
/// ū = -K x̄ + d(k) and the parameters are scheduler(x̄, ū).
LftTrajectory simulate_lft_closed_loop(
    const LftSystem& lft, const std::function<Vector(const Vector&, const Vector&)>& scheduler,
    const Matrix& gain, const Matrix& disturbance, const Vector& x0);

}  // namespace lftkit

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lftkit/dynamics.hpp"
#include "lftkit/envelope.hpp"

namespace lftkit {

/// Constraints for the monomial basis of each equation.
struct BasisSpec {
  int num_vars = 0;            ///< n + n_u
  int num_state_equations = 0; ///< n
  int max_degree = 3;          ///< p; monomials have total degree 2..p
  /// Per-variable degree cap; empty or a negative entry means uncapped.
  std::vector<int> variable_caps;
  /// Variables allowed in each equation (state equations first, then
  /// output equations). The number of entries fixes the equation count.
  std::vector<std::vector<int>> equation_variables;
};

/// Per-equation exponent rows. Block k holds one row per monomial of
/// equation k; row j is the exponent vector over [x̄; ū].
struct MonomialBasis {
  int num_vars = 0;
  int num_state_equations = 0;
  std::vector<IntMatrix> blocks;

  int num_equations() const { return static_cast<int>(blocks.size()); }
  int num_output_equations() const { return num_equations() - num_state_equations; }
  int block_size(int k) const { return static_cast<int>(blocks[k].rows()); }
  int total_size() const;

  /// zeta_k(z) for equation k.
  Vector evaluate_block(int k, const Eigen::Ref<const Vector>& z) const;
  /// Regressor matrix Theta_k, one row per sample row of `samples`.
  Matrix regressors(int k, const Matrix& samples) const;
};

/// Single monomial value prod_i z_i^alpha_i.
double monomial_value(const Eigen::Ref<const Eigen::VectorXi>& exponents,
                      const Eigen::Ref<const Vector>& z);

/// Enumerates every admissible exponent vector, graded-lexicographic order
/// (total degree ascending, then lexicographically descending).
MonomialBasis build_basis(const BasisSpec& spec);

/// Variables appearing in each state and output equation, detected from
/// Jacobians at probe points when the system does not declare them. An
/// output equation with constant Jacobian (affine h) gets an empty set.
std::vector<std::vector<int>> detect_equation_variables(const NonlinearSystem& sys,
                                                        const DiscreteLinearModel& lin,
                                                        const Hyperrectangle& box);

/// One-step discrepancy between the nonlinear plant and its ZOH model.
struct DiscrepancyData {
  Matrix samples;               ///< one (p_x, p_u) per row
  std::vector<Vector> targets;  ///< y_k per equation
  std::vector<Matrix> regressors;  ///< Theta_k per equation
  int dropped = 0;
};

/// Draws Halton samples of the envelope and records, for each, the one-step
/// state discrepancy (and output discrepancy for output equations).
DiscrepancyData generate_discrepancy_data(const NonlinearSystem& sys,
                                          const DiscreteLinearModel& lin,
                                          const Hyperrectangle& box,
                                          const MonomialBasis& basis, int samples,
                                          std::uint64_t skip = 1);

/// One-step discrepancy of a single deviation point (state rows, then
/// output rows).
Vector one_step_discrepancy(const NonlinearSystem& sys, const DiscreteLinearModel& lin,
                            const Vector& x_dev, const Vector& u_dev);

struct LassoOptions {
  int max_iterations = 100000;
  double relative_tolerance = 1e-10;
  double truncation = 1e-10;
  bool polish = true;  ///< exact KKT solve on the detected support
};

struct LassoResult {
  Vector coefficients;
  double objective = 0.0;  ///< 0.5 ||y - Theta E||^2 + sigma ||D E||_1
  int iterations = 0;
};

/// min 0.5 ||y - Theta E||^2 + sigma ||E||_1 over unit-norm-scaled columns
/// (coefficients mapped back afterwards). FISTA with step 1/L, then an
/// exact solve of the optimality conditions on the recovered support.
LassoResult fit_coefficients(const Matrix& theta, const Vector& y, double sigma,
                             const LassoOptions& options = {},
                             const Vector* warm_start = nullptr);

/// Largest violation of the LASSO optimality conditions in the scaled
/// coordinates: max over active j of |g_j + sigma sign| and over inactive
/// j of (|g_j| - sigma)_+, with g the scaled residual correlation.
double lasso_kkt_violation(const Matrix& theta, const Vector& y, double sigma,
                           const Vector& coefficients);

/// max_j |theta_j^T y| / ||theta_j||: smallest sigma giving E = 0.
double lasso_sigma_max(const Matrix& theta, const Vector& y);

struct ParetoRow {
  double sigma = 0.0;
  double fit_error = 0.0;         ///< training residual RMS
  double validation_error = 0.0;  ///< validation residual RMS
  double l1_norm = 0.0;
  int support = 0;
  Vector coefficients;
};

struct ParetoResult {
  std::vector<ParetoRow> rows;
  int selected = 0;
};

/// Warm-started solves along an ascending sigma grid on the training rows;
/// every fifth row (index % 5 == 4) is held out for validation when there
/// are at least five rows. Selection: the largest sigma whose validation
/// error is within 1.1x of the error at the smallest sigma.
ParetoResult pareto_sweep(const Matrix& theta, const Vector& y,
                          const std::vector<double>& sigma_grid,
                          const LassoOptions& options = {});

/// Splits rows into (train, validation) the way pareto_sweep does.
std::pair<std::vector<int>, std::vector<int>> pareto_split(int rows);

/// Polynomial nonlinear state-space model
///   x̄⁺ = A_d x̄ + B_d ū + E^T zeta(x̄, ū),  ȳ = C x̄ + D ū + E_y^T zeta_y.
struct PnlssModel {
  DiscreteLinearModel linear;
  MonomialBasis basis;
  std::vector<Vector> coefficients;  ///< E_k per equation
  std::vector<double> sigma;         ///< regularization used per equation
  Hyperrectangle envelope;

  int state_dim() const { return linear.state_dim(); }
  int input_dim() const { return linear.input_dim(); }
  int output_dim() const { return linear.output_dim(); }

  /// E^T zeta for all equations (state rows then output rows).
  Vector residual(const Eigen::Ref<const Vector>& x_dev,
                  const Eigen::Ref<const Vector>& u_dev) const;

  /// Block-diagonal E (n_p x number of equations).
  Matrix coefficient_matrix() const;
};

PnlssModel assemble_pnlss(const DiscreteLinearModel& lin, const MonomialBasis& basis,
                          std::vector<Vector> coefficients, const Hyperrectangle& envelope,
                          std::vector<double> sigma = {});

/// Next state deviation x̄⁺.
Vector evaluate_pnlss(const PnlssModel& model, const Vector& x_dev, const Vector& u_dev);

/// Output deviation ȳ.
Vector evaluate_pnlss_output(const PnlssModel& model, const Vector& x_dev,
                             const Vector& u_dev);

}  // namespace lftkit

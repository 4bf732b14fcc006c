#pragma once

#include <string>
#include <vector>

#include "lftkit/envelope.hpp"
#include "lftkit/lft_system.hpp"
#include "lftkit/sysid.hpp"

namespace lftkit {

/// One polynomial entry of the parameter-dependent residual:
/// coefficient * prod_i rho_i^exponents_i added to M(row, col).
struct LpvTerm {
  double coefficient = 0.0;
  int row = 0;  ///< state rows, then output rows
  int col = 0;  ///< state columns, then input columns
  Eigen::VectorXi exponents;
};

/// LPV model  [x̄⁺; ȳ] = M(rho) [x̄; ū],  M(rho) = base + sum of terms.
struct LpvModel {
  int state_dim = 0;
  int input_dim = 0;
  int output_dim = 0;
  Matrix base;  ///< [A_d B_d; C D]
  std::vector<LpvTerm> terms;
  std::vector<std::string> parameter_names;
  /// Index into [x̄; ū] each parameter is read from, or -1 for derived
  /// (reduced) parameters.
  std::vector<int> parameter_sources;
  ParameterSet parameters;

  int num_parameters() const { return static_cast<int>(parameter_names.size()); }
  int num_vars() const { return state_dim + input_dim; }

  /// M(rho).
  Matrix evaluate(const Vector& rho) const;
  /// M(rho) w without forming M.
  Vector apply(const Vector& rho, const Vector& w) const;
  /// d(M(rho) w)/d rho, one column per parameter.
  Matrix apply_jacobian(const Vector& rho, const Vector& w) const;
  /// Fixed selection layer W1 (unit rows picking rho out of [x̄; ū]).
  Matrix selection() const;
  /// rho read directly from w = [x̄; ū]; requires every source >= 0.
  Vector parameters_from(const Vector& w) const;

  /// Merges duplicate (row, col, exponents) terms, folds constant terms
  /// into `base`, drops exact zeros and sorts deterministically.
  void canonicalize();
};

/// Variable factoring order: descending share of containing monomials in
/// which the variable has degree exactly one, then descending number of
/// containing monomials, then ascending envelope half-width, then index.
/// Variables in no monomial come last.
std::vector<int> default_priority(const MonomialBasis& basis, const Hyperrectangle& envelope);

/// The basis restricted to monomials with a nonzero coefficient.
MonomialBasis active_basis(const PnlssModel& model);

/// Function substitution: each monomial factors out its highest-priority
/// variable, giving [dA dB; dC dD](rho) with rho the variables left in any
/// factored monomial.
LpvModel factorize(const PnlssModel& pnlss, const std::vector<int>& priority);

/// Residual (dA x̄ + dB ū; dC x̄ + dD ū) computed from the LPV terms with
/// rho read from (x̄, ū).
Vector lpv_residual(const LpvModel& lpv, const Vector& w);

/// Exact LFT realization with channels shared through a per-column prefix
/// trie over the parameter order. Block i holds rho_i's channels.
LftSystem lft_realize(const LpvModel& lpv);

/// Substitutes rho = W mu + b into every term and expands. Constant parts
/// move into the base matrix; `mu_set` becomes the new parameter set.
LpvModel reduced_lpv(const LpvModel& lpv, const Matrix& decoder_weight,
                     const Vector& decoder_bias, const ParameterSet& mu_set);

/// Parameter set whose value bounds come from the envelope coordinates the
/// parameters are read from; rate bounds default to +/- the value range.
ParameterSet envelope_parameter_set(const LpvModel& lpv, const Hyperrectangle& envelope);

}  // namespace lftkit

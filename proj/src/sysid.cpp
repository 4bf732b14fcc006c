#include "lftkit/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace lftkit {

namespace {

void enumerate_exponents(const std::vector<int>& vars, const std::vector<int>& caps,
                         int max_degree, std::size_t position, int degree,
                         Eigen::VectorXi& current, std::vector<Eigen::VectorXi>& out) {
  if (position == vars.size()) {
    if (degree >= 2) out.push_back(current);
    return;
  }
  const int var = vars[position];
  int cap = max_degree - degree;
  if (var < static_cast<int>(caps.size()) && caps[var] >= 0) cap = std::min(cap, caps[var]);
  for (int e = 0; e <= cap; ++e) {
    current[var] = e;
    enumerate_exponents(vars, caps, max_degree, position + 1, degree + e, current, out);
  }
  current[var] = 0;
}

bool graded_lex_less(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  const int da = a.sum();
  const int db = b.sum();
  if (da != db) return da < db;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

Vector soft_threshold(const Vector& v, double threshold) {
  return v.unaryExpr([threshold](double x) {
    if (x > threshold) return x - threshold;
    if (x < -threshold) return x + threshold;
    return 0.0;
  });
}

double power_iteration_max_eigenvalue(const Matrix& gram) {
  const auto p = gram.rows();
  if (p == 0) return 0.0;
  Vector v = Vector::Ones(p) / std::sqrt(static_cast<double>(p));
  double lambda = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Vector w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - lambda) <= 1e-13 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

// Problem restricted to nonzero columns, each scaled to unit norm.
struct ScaledProblem {
  std::vector<int> columns;
  Vector scale;  // original column norms
  Matrix gram;
  Vector correlation;
  double half_y2 = 0.0;

  ScaledProblem(const Matrix& theta, const Vector& y) {
    for (int j = 0; j < theta.cols(); ++j) {
      if (theta.col(j).norm() > 0.0) columns.push_back(j);
    }
    const auto p = static_cast<Eigen::Index>(columns.size());
    Matrix scaled(theta.rows(), p);
    scale.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      scale[j] = theta.col(columns[static_cast<std::size_t>(j)]).norm();
      scaled.col(j) = theta.col(columns[static_cast<std::size_t>(j)]) / scale[j];
    }
    gram = scaled.transpose() * scaled;
    correlation = scaled.transpose() * y;
    half_y2 = 0.5 * y.squaredNorm();
  }

  double objective(const Vector& beta, double sigma) const {
    const double quad = half_y2 - correlation.dot(beta) + 0.5 * beta.dot(gram * beta);
    return std::max(quad, 0.0) + sigma * beta.lpNorm<1>();
  }

  // Solves the optimality conditions on the support of `beta` with fixed
  // signs; returns nullopt when the result is not a valid LASSO solution.
  std::optional<Vector> polish(const Vector& beta, double sigma) const {
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
      if (beta[j] != 0.0) support.push_back(j);
    }
    Vector result = Vector::Zero(beta.size());
    if (!support.empty()) {
      const auto s = static_cast<Eigen::Index>(support.size());
      Matrix g_s(s, s);
      Vector rhs(s);
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) g_s(a, b) = gram(support[a], support[b]);
        rhs[a] = correlation[support[a]] - sigma * (beta[support[a]] > 0 ? 1.0 : -1.0);
      }
      Eigen::ColPivHouseholderQR<Matrix> qr(g_s);
      if (qr.rank() < s) return std::nullopt;
      const Vector solved = qr.solve(rhs);
      for (Eigen::Index a = 0; a < s; ++a) {
        if (solved[a] * beta[support[a]] <= 0.0) return std::nullopt;
        result[support[a]] = solved[a];
      }
    }
    const Vector gradient = gram * result - correlation;
    const double slack = 1e-9 * std::max(sigma, correlation.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < result.size(); ++j) {
      if (result[j] == 0.0 && std::abs(gradient[j]) > sigma + slack) return std::nullopt;
    }
    return result;
  }
};

}  // namespace

int MonomialBasis::total_size() const {
  int total = 0;
  for (const auto& block : blocks) total += static_cast<int>(block.rows());
  return total;
}

double monomial_value(const Eigen::Ref<const Eigen::VectorXi>& exponents,
                      const Eigen::Ref<const Vector>& z) {
  double value = 1.0;
  for (int i = 0; i < exponents.size(); ++i) {
    for (int e = 0; e < exponents[i]; ++e) value *= z[i];
  }
  return value;
}

Vector MonomialBasis::evaluate_block(int k, const Eigen::Ref<const Vector>& z) const {
  const auto& block = blocks[static_cast<std::size_t>(k)];
  Vector out(block.rows());
  for (int j = 0; j < block.rows(); ++j) out[j] = monomial_value(block.row(j).transpose(), z);
  return out;
}

Matrix MonomialBasis::regressors(int k, const Matrix& samples) const {
  const auto& block = blocks[static_cast<std::size_t>(k)];
  Matrix theta(samples.rows(), block.rows());
  for (int i = 0; i < samples.rows(); ++i) {
    theta.row(i) = evaluate_block(k, samples.row(i).transpose()).transpose();
  }
  return theta;
}

MonomialBasis build_basis(const BasisSpec& spec) {
  if (spec.max_degree < 2) throw DomainError("build_basis: max degree must be at least 2");
  MonomialBasis basis;
  basis.num_vars = spec.num_vars;
  basis.num_state_equations = spec.num_state_equations;

  auto equations = spec.equation_variables;
  if (equations.empty()) {
    std::vector<int> all(static_cast<std::size_t>(spec.num_vars));
    std::iota(all.begin(), all.end(), 0);
    equations.assign(static_cast<std::size_t>(spec.num_state_equations), all);
  }
  if (static_cast<int>(equations.size()) < spec.num_state_equations) {
    throw DomainError("build_basis: fewer variable subsets than state equations");
  }
  for (std::size_t k = 0; k < equations.size(); ++k) {
    auto vars = equations[k];
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (int v : vars) {
      if (v < 0 || v >= spec.num_vars) throw DomainError("build_basis: variable index out of range");
    }
    std::vector<Eigen::VectorXi> rows;
    Eigen::VectorXi current = Eigen::VectorXi::Zero(spec.num_vars);
    enumerate_exponents(vars, spec.variable_caps, spec.max_degree, 0, 0, current, rows);
    std::sort(rows.begin(), rows.end(), graded_lex_less);
    IntMatrix block(static_cast<Eigen::Index>(rows.size()), spec.num_vars);
    for (std::size_t j = 0; j < rows.size(); ++j) block.row(static_cast<Eigen::Index>(j)) = rows[j].transpose();
    if (rows.empty() && static_cast<int>(k) < spec.num_state_equations) {
      log_message(LogLevel::kWarning,
                  "build_basis: empty basis for equation " + std::to_string(k + 1));
    }
    basis.blocks.push_back(std::move(block));
  }
  return basis;
}

std::vector<std::vector<int>> detect_equation_variables(const NonlinearSystem& sys,
                                                        const DiscreteLinearModel& lin,
                                                        const Hyperrectangle& box) {
  if (!sys.equation_variables.empty()) return sys.equation_variables;
  const int n = sys.state_dim;
  const int nv = sys.state_dim + sys.input_dim;
  const Matrix probes = halton_sample(nv, 8, box, 1);
  std::vector<Matrix> jf, jh;
  for (int i = 0; i < probes.rows(); ++i) {
    const Vector x = lin.x_op + probes.row(i).head(n).transpose();
    const Vector u = lin.u_op + probes.row(i).tail(sys.input_dim).transpose();
    const auto j = linearize(sys, x, u);
    Matrix full_f(n, nv), full_h(sys.output_dim, nv);
    full_f << j.A, j.B;
    full_h << j.C, j.D;
    jf.push_back(full_f);
    jh.push_back(full_h);
  }
  std::vector<std::vector<int>> result;
  auto appearing = [&](const std::vector<Matrix>& jacs, int row) {
    std::vector<int> vars;
    for (int v = 0; v < nv; ++v) {
      bool used = false;
      for (const auto& jac : jacs) used = used || std::abs(jac(row, v)) > 1e-9;
      if (used) vars.push_back(v);
    }
    return vars;
  };
  for (int k = 0; k < n; ++k) result.push_back(appearing(jf, k));
  for (int k = 0; k < sys.output_dim; ++k) {
    bool constant = true;
    for (const auto& jac : jh) {
      constant = constant && (jac.row(k) - jh.front().row(k)).cwiseAbs().maxCoeff() <= 1e-9;
    }
    result.push_back(constant ? std::vector<int>{} : appearing(jh, k));
  }
  return result;
}

Vector one_step_discrepancy(const NonlinearSystem& sys, const DiscreteLinearModel& lin,
                            const Vector& x_dev, const Vector& u_dev) {
  const Vector x0 = lin.x_op + x_dev;
  const Vector u = lin.u_op + u_dev;
  const Vector x_tau = rk4_interval(sys, x0, u, lin.tau);
  if (!x_tau.allFinite() || x_tau.norm() > kDivergenceThreshold) {
    throw DivergenceError("one-step simulation diverged", lin.tau);
  }
  Vector out(sys.state_dim + sys.output_dim);
  out.head(sys.state_dim) = x_tau - lin.x_op - (lin.A * x_dev + lin.B * u_dev);
  out.tail(sys.output_dim) =
      sys.h(x0, u) - sys.h(lin.x_op, lin.u_op) - (lin.C * x_dev + lin.D * u_dev);
  return out;
}

DiscrepancyData generate_discrepancy_data(const NonlinearSystem& sys,
                                          const DiscreteLinearModel& lin,
                                          const Hyperrectangle& box,
                                          const MonomialBasis& basis, int samples,
                                          std::uint64_t skip) {
  if (samples < 1) throw DomainError("discrepancy data: at least one sample required");
  const int n = sys.state_dim;
  const int nv = n + sys.input_dim;
  const Matrix points = halton_sample(nv, samples, box, skip);
  DiscrepancyData data;
  std::vector<Vector> kept_points;
  std::vector<Vector> kept_delta;
  for (int i = 0; i < points.rows(); ++i) {
    const Vector x_dev = points.row(i).head(n).transpose();
    const Vector u_dev = points.row(i).tail(sys.input_dim).transpose();
    try {
      kept_delta.push_back(one_step_discrepancy(sys, lin, x_dev, u_dev));
      kept_points.push_back(points.row(i).transpose());
    } catch (const DivergenceError&) {
      ++data.dropped;
      log_message(LogLevel::kWarning,
                  "discrepancy data: dropped divergent sample " + std::to_string(i));
    }
  }
  const auto kept = static_cast<Eigen::Index>(kept_points.size());
  data.samples.resize(kept, nv);
  for (Eigen::Index i = 0; i < kept; ++i) data.samples.row(i) = kept_points[static_cast<std::size_t>(i)].transpose();
  for (int k = 0; k < basis.num_equations(); ++k) {
    const int row = k < basis.num_state_equations ? k : n + (k - basis.num_state_equations);
    Vector target(kept);
    for (Eigen::Index i = 0; i < kept; ++i) target[i] = kept_delta[static_cast<std::size_t>(i)][row];
    data.targets.push_back(std::move(target));
    data.regressors.push_back(basis.regressors(k, data.samples));
  }
  return data;
}

LassoResult fit_coefficients(const Matrix& theta, const Vector& y, double sigma,
                             const LassoOptions& options, const Vector* warm_start) {
  if (theta.rows() < 1) throw DomainError("fit_coefficients: no rows");
  if (theta.rows() != y.size()) throw DomainError("fit_coefficients: row mismatch");
  if (!(sigma >= 0.0)) throw DomainError("fit_coefficients: sigma must be nonnegative");

  const ScaledProblem problem(theta, y);
  const auto p = static_cast<Eigen::Index>(problem.columns.size());
  LassoResult result;
  result.coefficients = Vector::Zero(theta.cols());
  if (p == 0) {
    result.objective = problem.half_y2;
    return result;
  }

  Vector beta = Vector::Zero(p);
  if (warm_start != nullptr && warm_start->size() == theta.cols()) {
    for (Eigen::Index j = 0; j < p; ++j) {
      beta[j] = (*warm_start)[problem.columns[static_cast<std::size_t>(j)]] * problem.scale[j];
    }
  }
  const double lipschitz = power_iteration_max_eigenvalue(problem.gram) * (1.0 + 1e-9);
  const double step = 1.0 / lipschitz;

  Vector momentum = beta;
  Vector previous = beta;
  double t = 1.0;
  double objective = problem.objective(beta, sigma);
  double last_change = std::numeric_limits<double>::infinity();
  bool converged = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Vector gradient = problem.gram * momentum - problem.correlation;
    beta = soft_threshold(momentum - step * gradient, sigma * step);
    const double next_objective = problem.objective(beta, sigma);
    if (next_objective > objective) {
      // Adaptive restart: drop momentum when the objective goes up.
      t = 1.0;
      momentum = beta;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      momentum = beta + ((t - 1.0) / t_next) * (beta - previous);
      t = t_next;
    }
    last_change = std::abs(next_objective - objective) /
                  std::max(std::abs(next_objective), std::numeric_limits<double>::min());
    objective = next_objective;
    previous = beta;
    if (last_change < options.relative_tolerance && it > 0) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "fit_coefficients: no convergence after " << options.max_iterations
       << " iterations (relative objective change " << last_change << ")";
    throw ConvergenceError(os.str(), last_change);
  }
  if (options.polish) {
    if (auto polished = problem.polish(beta, sigma)) {
      const double polished_objective = problem.objective(*polished, sigma);
      if (polished_objective <= objective * (1.0 + 1e-12) + 1e-300) {
        beta = *polished;
        objective = polished_objective;
      }
    }
  }

  for (Eigen::Index j = 0; j < p; ++j) {
    double value = beta[j] / problem.scale[j];
    if (std::abs(value) < options.truncation) value = 0.0;
    result.coefficients[problem.columns[static_cast<std::size_t>(j)]] = value;
  }
  result.objective = objective;
  result.iterations = it + 1;
  return result;
}

double lasso_kkt_violation(const Matrix& theta, const Vector& y, double sigma,
                           const Vector& coefficients) {
  const ScaledProblem problem(theta, y);
  double worst = 0.0;
  for (std::size_t a = 0; a < problem.columns.size(); ++a) {
    const int j = problem.columns[a];
    const auto ia = static_cast<Eigen::Index>(a);
    Vector beta(static_cast<Eigen::Index>(problem.columns.size()));
    for (std::size_t b = 0; b < problem.columns.size(); ++b) {
      beta[static_cast<Eigen::Index>(b)] = coefficients[problem.columns[b]] * problem.scale[static_cast<Eigen::Index>(b)];
    }
    const double g = problem.gram.row(ia).dot(beta) - problem.correlation[ia];
    const double c = coefficients[j];
    const double violation = c != 0.0 ? std::abs(g + sigma * (c > 0 ? 1.0 : -1.0))
                                      : std::max(std::abs(g) - sigma, 0.0);
    worst = std::max(worst, violation);
  }
  return worst;
}

double lasso_sigma_max(const Matrix& theta, const Vector& y) {
  double best = 0.0;
  for (int j = 0; j < theta.cols(); ++j) {
    const double norm = theta.col(j).norm();
    if (norm > 0.0) best = std::max(best, std::abs(theta.col(j).dot(y)) / norm);
  }
  return best;
}

std::pair<std::vector<int>, std::vector<int>> pareto_split(int rows) {
  std::vector<int> train, validation;
  for (int i = 0; i < rows; ++i) {
    if (rows >= 5 && i % 5 == 4) {
      validation.push_back(i);
    } else {
      train.push_back(i);
    }
  }
  return {train, validation};
}

ParetoResult pareto_sweep(const Matrix& theta, const Vector& y,
                          const std::vector<double>& sigma_grid,
                          const LassoOptions& options) {
  if (sigma_grid.empty()) throw DomainError("pareto_sweep: empty sigma grid");
  if (!std::is_sorted(sigma_grid.begin(), sigma_grid.end())) {
    throw DomainError("pareto_sweep: sigma grid must be ascending");
  }
  const auto [train, validation] = pareto_split(static_cast<int>(theta.rows()));
  const Matrix theta_train = theta(train, Eigen::all);
  const Vector y_train = y(train);
  const Matrix theta_val = theta(validation, Eigen::all);
  const Vector y_val = y(validation);

  auto rms = [](const Vector& r) {
    return r.size() == 0 ? 0.0 : std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
  };

  ParetoResult result;
  Vector warm = Vector::Zero(theta.cols());
  for (double sigma : sigma_grid) {
    const auto fit = fit_coefficients(theta_train, y_train, sigma, options, &warm);
    warm = fit.coefficients;
    ParetoRow row;
    row.sigma = sigma;
    row.coefficients = fit.coefficients;
    row.fit_error = rms(y_train - theta_train * fit.coefficients);
    row.validation_error = validation.empty() ? row.fit_error
                                              : rms(y_val - theta_val * fit.coefficients);
    row.l1_norm = fit.coefficients.lpNorm<1>();
    row.support = static_cast<int>((fit.coefficients.array() != 0.0).count());
    result.rows.push_back(std::move(row));
  }
  const double reference = result.rows.front().validation_error;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    if (result.rows[i].validation_error <= 1.1 * reference) result.selected = static_cast<int>(i);
  }
  return result;
}

Vector PnlssModel::residual(const Eigen::Ref<const Vector>& x_dev,
                            const Eigen::Ref<const Vector>& u_dev) const {
  Vector z(x_dev.size() + u_dev.size());
  z << x_dev, u_dev;
  Vector out = Vector::Zero(basis.num_equations());
  for (int k = 0; k < basis.num_equations(); ++k) {
    if (basis.block_size(k) == 0) continue;
    out[k] = coefficients[static_cast<std::size_t>(k)].dot(basis.evaluate_block(k, z));
  }
  return out;
}

Matrix PnlssModel::coefficient_matrix() const {
  Matrix e = Matrix::Zero(basis.total_size(), basis.num_equations());
  int offset = 0;
  for (int k = 0; k < basis.num_equations(); ++k) {
    const int size = basis.block_size(k);
    e.block(offset, k, size, 1) = coefficients[static_cast<std::size_t>(k)];
    offset += size;
  }
  return e;
}

PnlssModel assemble_pnlss(const DiscreteLinearModel& lin, const MonomialBasis& basis,
                          std::vector<Vector> coefficients, const Hyperrectangle& envelope,
                          std::vector<double> sigma) {
  if (static_cast<int>(coefficients.size()) != basis.num_equations()) {
    throw DomainError("assemble_pnlss: coefficient block count mismatch");
  }
  for (int k = 0; k < basis.num_equations(); ++k) {
    if (coefficients[static_cast<std::size_t>(k)].size() != basis.block_size(k)) {
      throw DomainError("assemble_pnlss: coefficient block " + std::to_string(k) +
                        " does not match basis");
    }
  }
  if (basis.num_state_equations != lin.state_dim() ||
      (basis.num_output_equations() != 0 && basis.num_output_equations() != lin.output_dim())) {
    throw DomainError("assemble_pnlss: basis equations do not match the linear model");
  }
  if (sigma.empty()) sigma.assign(coefficients.size(), 0.0);
  PnlssModel model;
  model.linear = lin;
  model.basis = basis;
  model.coefficients = std::move(coefficients);
  model.sigma = std::move(sigma);
  model.envelope = envelope;
  return model;
}

Vector evaluate_pnlss(const PnlssModel& model, const Vector& x_dev, const Vector& u_dev) {
  const Vector r = model.residual(x_dev, u_dev);
  return model.linear.A * x_dev + model.linear.B * u_dev + r.head(model.state_dim());
}

Vector evaluate_pnlss_output(const PnlssModel& model, const Vector& x_dev,
                             const Vector& u_dev) {
  Vector y = model.linear.C * x_dev + model.linear.D * u_dev;
  if (model.basis.num_output_equations() > 0) {
    y += model.residual(x_dev, u_dev).tail(model.output_dim());
  }
  return y;
}

}  // namespace lftkit

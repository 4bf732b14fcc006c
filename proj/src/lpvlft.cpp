#include "lftkit/lpvlft.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "lftkit/polynomial.hpp"

namespace lftkit {

namespace {

double power(double base, int exponent) {
  double value = 1.0;
  for (int i = 0; i < exponent; ++i) value *= base;
  return value;
}

double monomial(const Eigen::VectorXi& exponents, const Vector& rho) {
  double value = 1.0;
  for (int i = 0; i < exponents.size(); ++i) value *= power(rho[i], exponents[i]);
  return value;
}

bool exponent_less(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  const int da = a.sum();
  const int db = b.sum();
  if (da != db) return da < db;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

}  // namespace

Matrix LpvModel::evaluate(const Vector& rho) const {
  Matrix m = base;
  for (const auto& t : terms) m(t.row, t.col) += t.coefficient * monomial(t.exponents, rho);
  return m;
}

Vector LpvModel::apply(const Vector& rho, const Vector& w) const {
  Vector out = base * w;
  for (const auto& t : terms) out[t.row] += t.coefficient * monomial(t.exponents, rho) * w[t.col];
  return out;
}

Matrix LpvModel::apply_jacobian(const Vector& rho, const Vector& w) const {
  Matrix jac = Matrix::Zero(base.rows(), num_parameters());
  for (const auto& t : terms) {
    const double scale = t.coefficient * w[t.col];
    if (scale == 0.0) continue;
    for (int i = 0; i < t.exponents.size(); ++i) {
      const int e = t.exponents[i];
      if (e == 0) continue;
      double partial = scale * e * power(rho[i], e - 1);
      for (int j = 0; j < t.exponents.size(); ++j) {
        if (j != i) partial *= power(rho[j], t.exponents[j]);
      }
      jac(t.row, i) += partial;
    }
  }
  return jac;
}

Matrix LpvModel::selection() const {
  Matrix w1 = Matrix::Zero(num_parameters(), num_vars());
  for (int i = 0; i < num_parameters(); ++i) {
    const int src = parameter_sources[static_cast<std::size_t>(i)];
    if (src < 0) throw DomainError("LPV: parameter " + parameter_names[static_cast<std::size_t>(i)] +
                                   " is not a state/input coordinate");
    w1(i, src) = 1.0;
  }
  return w1;
}

Vector LpvModel::parameters_from(const Vector& w) const {
  Vector rho(num_parameters());
  for (int i = 0; i < num_parameters(); ++i) {
    const int src = parameter_sources[static_cast<std::size_t>(i)];
    if (src < 0) throw DomainError("LPV: derived parameter cannot be read from the state");
    rho[i] = w[src];
  }
  return rho;
}

void LpvModel::canonicalize() {
  std::map<std::tuple<int, int, std::vector<int>>, double> merged;
  for (const auto& t : terms) {
    if (t.exponents.sum() == 0) {
      base(t.row, t.col) += t.coefficient;
      continue;
    }
    std::vector<int> e(t.exponents.data(), t.exponents.data() + t.exponents.size());
    merged[{t.row, t.col, e}] += t.coefficient;
  }
  std::vector<LpvTerm> out;
  for (const auto& [key, c] : merged) {
    if (c == 0.0) continue;
    const auto& [row, col, e] = key;
    LpvTerm t;
    t.coefficient = c;
    t.row = row;
    t.col = col;
    t.exponents = Eigen::Map<const Eigen::VectorXi>(e.data(), static_cast<Eigen::Index>(e.size()));
    out.push_back(std::move(t));
  }
  std::stable_sort(out.begin(), out.end(), [](const LpvTerm& a, const LpvTerm& b) {
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    return exponent_less(a.exponents, b.exponents);
  });
  terms = std::move(out);
}

std::vector<int> default_priority(const MonomialBasis& basis, const Hyperrectangle& envelope) {
  const int nv = basis.num_vars;
  std::vector<int> containing(static_cast<std::size_t>(nv), 0);
  std::vector<int> linear(static_cast<std::size_t>(nv), 0);
  for (const auto& block : basis.blocks) {
    for (int j = 0; j < block.rows(); ++j) {
      for (int v = 0; v < nv; ++v) {
        if (block(j, v) >= 1) ++containing[static_cast<std::size_t>(v)];
        if (block(j, v) == 1) ++linear[static_cast<std::size_t>(v)];
      }
    }
  }
  const Vector half = envelope.dim() == nv ? envelope.half_width() : Vector::Ones(nv);
  const double mean_half = half.size() > 0 ? half.mean() : 1.0;
  std::vector<int> order(static_cast<std::size_t>(nv));
  std::iota(order.begin(), order.end(), 0);
  auto fraction = [&](int v) {
    const auto c = containing[static_cast<std::size_t>(v)];
    return c == 0 ? 0.0 : static_cast<double>(linear[static_cast<std::size_t>(v)]) / c;
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool used_a = containing[static_cast<std::size_t>(a)] > 0;
    const bool used_b = containing[static_cast<std::size_t>(b)] > 0;
    if (used_a != used_b) return used_a;
    if (fraction(a) != fraction(b)) return fraction(a) > fraction(b);
    if (containing[static_cast<std::size_t>(a)] != containing[static_cast<std::size_t>(b)]) {
      return containing[static_cast<std::size_t>(a)] > containing[static_cast<std::size_t>(b)];
    }
    const double ha = mean_half > 0 ? half[a] / mean_half : half[a];
    const double hb = mean_half > 0 ? half[b] / mean_half : half[b];
    if (ha != hb) return ha < hb;
    return a < b;
  });
  return order;
}

MonomialBasis active_basis(const PnlssModel& model) {
  MonomialBasis out;
  out.num_vars = model.basis.num_vars;
  out.num_state_equations = model.basis.num_state_equations;
  for (int k = 0; k < model.basis.num_equations(); ++k) {
    const auto& block = model.basis.blocks[static_cast<std::size_t>(k)];
    const auto& coef = model.coefficients[static_cast<std::size_t>(k)];
    std::vector<int> rows;
    for (int j = 0; j < block.rows(); ++j) {
      if (coef[j] != 0.0) rows.push_back(j);
    }
    out.blocks.push_back(block(rows, Eigen::all));
  }
  return out;
}

LpvModel factorize(const PnlssModel& pnlss, const std::vector<int>& priority) {
  const int n = pnlss.state_dim();
  const int nu = pnlss.input_dim();
  const int ny = pnlss.output_dim();
  const int nv = n + nu;
  if (static_cast<int>(priority.size()) != nv) {
    throw DomainError("factorize: priority must list every state and input variable");
  }

  struct Raw {
    double coefficient;
    int row;
    int col;
    Eigen::VectorXi remaining;  // over [x̄; ū]
  };
  std::vector<Raw> raw;
  std::vector<bool> is_parameter(static_cast<std::size_t>(nv), false);
  const auto& basis = pnlss.basis;
  for (int k = 0; k < basis.num_equations(); ++k) {
    const auto& block = basis.blocks[static_cast<std::size_t>(k)];
    const auto& coef = pnlss.coefficients[static_cast<std::size_t>(k)];
    for (int j = 0; j < block.rows(); ++j) {
      if (coef[j] == 0.0) continue;
      Eigen::VectorXi alpha = block.row(j).transpose();
      if (alpha.sum() < 2) throw DomainError("factorize: monomial of degree < 2");
      int factored = -1;
      for (int v : priority) {
        if (alpha[v] >= 1) {
          factored = v;
          break;
        }
      }
      alpha[factored] -= 1;
      for (int v = 0; v < nv; ++v) {
        if (alpha[v] > 0) is_parameter[static_cast<std::size_t>(v)] = true;
      }
      // Equation k: state rows first, then output rows.
      raw.push_back({coef[j], k, factored, alpha});
    }
  }

  LpvModel lpv;
  lpv.state_dim = n;
  lpv.input_dim = nu;
  lpv.output_dim = ny;
  lpv.base.resize(n + ny, nv);
  lpv.base << pnlss.linear.A, pnlss.linear.B, pnlss.linear.C, pnlss.linear.D;

  std::vector<int> variable_to_parameter(static_cast<std::size_t>(nv), -1);
  const auto& labels = pnlss.envelope.labels;
  for (int v = 0; v < nv; ++v) {
    if (!is_parameter[static_cast<std::size_t>(v)]) continue;
    variable_to_parameter[static_cast<std::size_t>(v)] = lpv.num_parameters();
    lpv.parameter_names.push_back(v < static_cast<int>(labels.size()) ? labels[static_cast<std::size_t>(v)]
                                                                      : "z" + std::to_string(v + 1));
    lpv.parameter_sources.push_back(v);
  }
  const int l = lpv.num_parameters();
  for (const auto& r : raw) {
    LpvTerm t;
    t.coefficient = r.coefficient;
    t.row = r.row;
    t.col = r.col;
    t.exponents = Eigen::VectorXi::Zero(l);
    for (int v = 0; v < nv; ++v) {
      if (r.remaining[v] > 0) t.exponents[variable_to_parameter[static_cast<std::size_t>(v)]] = r.remaining[v];
    }
    lpv.terms.push_back(std::move(t));
  }
  lpv.canonicalize();
  lpv.parameters = envelope_parameter_set(lpv, pnlss.envelope);
  return lpv;
}

ParameterSet envelope_parameter_set(const LpvModel& lpv, const Hyperrectangle& envelope) {
  ParameterSet set;
  for (int i = 0; i < lpv.num_parameters(); ++i) {
    const int src = lpv.parameter_sources[static_cast<std::size_t>(i)];
    Interval value{-1.0, 1.0};
    if (src >= 0 && src < envelope.dim()) value = {envelope.lower[src], envelope.upper[src]};
    set.value_bounds.push_back(value);
    set.rate_bounds.push_back({-value.width(), value.width()});
  }
  return set;
}

Vector lpv_residual(const LpvModel& lpv, const Vector& w) {
  const Vector rho = lpv.parameters_from(w);
  Vector out = Vector::Zero(lpv.base.rows());
  for (const auto& t : lpv.terms) out[t.row] += t.coefficient * monomial(t.exponents, rho) * w[t.col];
  return out;
}

LftSystem lft_realize(const LpvModel& lpv) {
  const int n = lpv.state_dim;
  const int nu = lpv.input_dim;
  const int ny = lpv.output_dim;
  const int l = lpv.num_parameters();

  // Trie nodes: each node is one channel labelled with a parameter.
  struct Node {
    int parameter;
    int parent;     // -1: fed by `input` from [x; u]
    Vector input;   // over the columns of [x; u]
    Vector output;  // over the rows of [x⁺; y]
    std::map<int, int> children;
    bool removed = false;
  };
  std::vector<Node> nodes;
  std::map<int, std::map<int, int>> roots;  // column -> parameter -> node

  for (const auto& t : lpv.terms) {
    std::vector<int> sequence;
    for (int i = 0; i < l; ++i) {
      for (int e = 0; e < t.exponents[i]; ++e) sequence.push_back(i);
    }
    if (sequence.empty()) throw DomainError("lft_realize: constant term left in LPV model");
    int current = -1;
    for (int parameter : sequence) {
      auto& children = current < 0 ? roots[t.col] : nodes[static_cast<std::size_t>(current)].children;
      auto it = children.find(parameter);
      if (it == children.end()) {
        Node node{parameter, current, Vector::Zero(n + nu), Vector::Zero(n + ny), {}};
        if (current < 0) node.input[t.col] = 1.0;
        nodes.push_back(std::move(node));
        const int id = static_cast<int>(nodes.size()) - 1;
        // `children` may dangle after push_back when it lives in `nodes`.
        auto& fresh = current < 0 ? roots[t.col] : nodes[static_cast<std::size_t>(current)].children;
        fresh.emplace(parameter, id);
        current = id;
      } else {
        current = it->second;
      }
    }
    nodes[static_cast<std::size_t>(current)].output[t.row] += t.coefficient;
  }

  // Degree-one channels of one parameter fed straight from [x; u] form
  // rho_p * C_p; when C_p has lower rank than the channel count it is
  // refactored through a rank-revealing LU.
  for (int p = 0; p < l; ++p) {
    std::vector<std::size_t> leaves;
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      if (nodes[id].parameter == p && nodes[id].parent < 0 && nodes[id].children.empty()) leaves.push_back(id);
    }
    if (leaves.size() < 2) continue;
    Matrix c = Matrix::Zero(n + ny, n + nu);
    for (auto id : leaves) c += nodes[id].output * nodes[id].input.transpose();
    Eigen::FullPivLU<Matrix> lu(c);
    const auto rank = static_cast<std::size_t>(lu.rank());
    if (rank >= leaves.size()) continue;
    const int k = static_cast<int>(rank);
    const Matrix lower = lu.matrixLU().leftCols(k).triangularView<Eigen::UnitLower>();
    const Matrix upper = lu.matrixLU().topRows(k).triangularView<Eigen::Upper>();
    const Matrix left = lu.permutationP().inverse() * lower;
    const Matrix right = upper * lu.permutationQ().inverse();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      auto& node = nodes[leaves[i]];
      if (i < rank) {
        node.input = right.row(static_cast<Eigen::Index>(i)).transpose();
        node.output = left.col(static_cast<Eigen::Index>(i));
      } else {
        node.removed = true;
      }
    }
  }

  // Channel order: grouped by parameter, creation order within a block.
  std::vector<int> channel_of(nodes.size(), -1);
  std::vector<int> repetitions(static_cast<std::size_t>(l), 0);
  int next_channel = 0;
  for (int p = 0; p < l; ++p) {
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      if (nodes[id].parameter == p && !nodes[id].removed) {
        channel_of[id] = next_channel++;
        ++repetitions[static_cast<std::size_t>(p)];
      }
    }
  }
  const int r = next_channel;

  LftSystem lft;
  lft.state_dim = n;
  lft.input_dim = nu;
  lft.output_dim = ny;
  lft.G = Matrix::Zero(n + r + ny, n + r + nu);
  lft.G.block(0, 0, n, n) = lpv.base.block(0, 0, n, n);
  lft.G.block(0, n + r, n, nu) = lpv.base.block(0, n, n, nu);
  lft.G.block(n + r, 0, ny, n) = lpv.base.block(n, 0, ny, n);
  lft.G.block(n + r, n + r, ny, nu) = lpv.base.block(n, n, ny, nu);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (nodes[id].removed) continue;
    const int ch = channel_of[id];
    const auto& node = nodes[id];
    if (node.parent < 0) {
      lft.G.block(n + ch, 0, 1, n) = node.input.head(n).transpose();
      lft.G.block(n + ch, n + r, 1, nu) = node.input.tail(nu).transpose();
    } else {
      lft.G(n + ch, n + channel_of[static_cast<std::size_t>(node.parent)]) = 1.0;
    }
    lft.G.block(0, n + ch, n, 1) += node.output.head(n);
    lft.G.block(n + r, n + ch, ny, 1) += node.output.tail(ny);
  }
  for (int p = 0; p < l; ++p) {
    UncertaintyBlock block;
    block.name = lpv.parameter_names[static_cast<std::size_t>(p)];
    block.repetitions = repetitions[static_cast<std::size_t>(p)];
    if (p < lpv.parameters.size()) {
      block.value_bounds = lpv.parameters.value_bounds[static_cast<std::size_t>(p)];
      block.rate_bounds = lpv.parameters.rate_bounds[static_cast<std::size_t>(p)];
    }
    lft.blocks.push_back(block);
  }
  return lft;
}

LpvModel reduced_lpv(const LpvModel& lpv, const Matrix& decoder_weight,
                     const Vector& decoder_bias, const ParameterSet& mu_set) {
  const int l = lpv.num_parameters();
  const int m = static_cast<int>(decoder_weight.cols());
  if (decoder_weight.rows() != l || decoder_bias.size() != l) {
    throw DomainError("reduced_lpv: decoder dimensions do not match the parameter count");
  }
  std::vector<Polynomial> substituted;
  for (int i = 0; i < l; ++i) {
    substituted.push_back(Polynomial::affine(decoder_weight.row(i).transpose(), decoder_bias[i]));
  }
  LpvModel out;
  out.state_dim = lpv.state_dim;
  out.input_dim = lpv.input_dim;
  out.output_dim = lpv.output_dim;
  out.base = lpv.base;
  for (int j = 0; j < m; ++j) {
    out.parameter_names.push_back("mu" + std::to_string(j + 1));
    out.parameter_sources.push_back(-1);
  }
  out.parameters = mu_set;
  for (const auto& t : lpv.terms) {
    Polynomial poly = Polynomial::constant(m, t.coefficient);
    for (int i = 0; i < l; ++i) {
      if (t.exponents[i] > 0) poly = poly * substituted[static_cast<std::size_t>(i)].pow(t.exponents[i]);
    }
    for (const auto& [e, c] : poly.terms()) {
      LpvTerm term;
      term.coefficient = c;
      term.row = t.row;
      term.col = t.col;
      term.exponents = Eigen::Map<const Eigen::VectorXi>(e.data(), m);
      out.terms.push_back(std::move(term));
    }
  }
  out.canonicalize();
  return out;
}

}  // namespace lftkit

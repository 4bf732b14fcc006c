#include "lftkit/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace lftkit {

namespace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

constexpr double kGolden = 0.6180339887498949;

double largest_singular_value(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  const ComplexMatrix gram = m.rows() <= m.cols() ? ComplexMatrix(m * m.adjoint())
                                                  : ComplexMatrix(m.adjoint() * m);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

ComplexMatrix frequency_response(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& d,
                                 double omega) {
  ComplexMatrix out = d.cast<Complex>();
  const auto n = a.rows();
  if (n == 0) return out;
  const Complex z = std::polar(1.0, omega);
  const ComplexMatrix resolvent = z * ComplexMatrix::Identity(n, n) - a.cast<Complex>();
  out += c.cast<Complex>() * resolvent.partialPivLu().solve(b.cast<Complex>());
  return out;
}

// Golden-section maximization of f on [lo, hi].
std::pair<double, double> golden_maximize(const std::function<double(double)>& f, double lo, double hi,
                                          double best_x, double best_value, double tolerance) {
  double x1 = hi - kGolden * (hi - lo);
  double x2 = lo + kGolden * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  double previous = best_value;
  for (int it = 0; it < 200; ++it) {
    if (f1 > best_value) { best_value = f1; best_x = x1; }
    if (f2 > best_value) { best_value = f2; best_x = x2; }
    if (it > 3 && std::abs(best_value - previous) <= tolerance * std::max(best_value, 1e-300) &&
        hi - lo < 1e-9 + tolerance) {
      break;
    }
    previous = best_value;
    if (f1 > f2) {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = f(x2);
    }
  }
  return {best_x, best_value};
}

std::vector<int> cumulative(const std::vector<int>& sizes) {
  std::vector<int> offsets{0};
  for (int s : sizes) offsets.push_back(offsets.back() + s);
  return offsets;
}

}  // namespace

std::vector<double> frequency_grid(int points) {
  points = std::max(points, 2);
  const double pi = std::numbers::pi;
  std::vector<double> grid{0.0, pi};
  const int log_points = points / 2;
  const int lin_points = points - log_points;
  for (int i = 0; i < log_points; ++i) {
    const double t = log_points > 1 ? static_cast<double>(i) / (log_points - 1) : 1.0;
    grid.push_back(pi * std::pow(10.0, -4.0 * (1.0 - t)));
  }
  for (int i = 0; i < lin_points; ++i) {
    grid.push_back(lin_points > 1 ? pi * i / (lin_points - 1) : pi);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double max_singular_value(const DiscreteSystem& sys, double omega) {
  return largest_singular_value(frequency_response(sys.A, sys.B, sys.C, sys.D, omega));
}

HinfResult hinf_norm_peak(const DiscreteSystem& sys, double tolerance, int grid) {
  if (sys.A.rows() > 0) {
    const double radius = spectral_radius(sys.A);
    if (!(radius < 1.0)) {
      std::ostringstream os;
      os << "H-infinity norm: system is not Schur stable (spectral radius " << radius << ")";
      throw InstabilityError(os.str(), radius);
    }
  }
  const auto omegas = frequency_grid(grid);
  std::vector<double> values(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) values[i] = max_singular_value(sys, omegas[i]);

  // Refine around the three largest local maxima of the grid.
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const bool left = i == 0 || values[i] >= values[i - 1];
    const bool right = i + 1 == omegas.size() || values[i] >= values[i + 1];
    if (left && right) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) {
    return values[a] != values[b] ? values[a] > values[b] : a < b;
  });
  if (peaks.size() > 3) peaks.resize(3);

  HinfResult best;
  const auto top = std::max_element(values.begin(), values.end());
  best.norm = *top;
  best.peak_frequency = omegas[static_cast<std::size_t>(top - values.begin())];
  const auto f = [&](double w) { return max_singular_value(sys, w); };
  for (std::size_t i : peaks) {
    const double lo = omegas[i == 0 ? 0 : i - 1];
    const double hi = omegas[std::min(i + 1, omegas.size() - 1)];
    if (!(hi > lo)) continue;
    const auto [x, v] = golden_maximize(f, lo, hi, omegas[i], values[i], tolerance);
    if (v > best.norm) {
      best.norm = v;
      best.peak_frequency = x;
    }
  }
  return best;
}

double hinf_norm(const DiscreteSystem& sys, double tolerance, int grid) {
  return hinf_norm_peak(sys, tolerance, grid).norm;
}

LftSystem close_loop(const LftSystem& lft, const Matrix& gain) {
  const int n = lft.state_dim;
  const int t = lft.theta_dim();
  if (gain.rows() != lft.input_dim || gain.cols() != n) throw DomainError("close_loop: gain has wrong shape");
  LftSystem out = lft;
  out.G.leftCols(n) -= lft.G.middleCols(n + t, lft.input_dim) * gain;
  return out;
}

int NormalizedLft::phi_dim() const {
  int total = 0;
  for (int r : channel_rows) total += r;
  return total;
}

int NormalizedLft::theta_dim() const {
  int total = 0;
  for (int c : channel_cols) total += c;
  return total;
}

DiscreteSystem NormalizedLft::nominal() const {
  const int n = state_dim;
  const int p = phi_dim();
  const int t = theta_dim();
  DiscreteSystem sys;
  sys.A = N.block(0, 0, n, n);
  sys.B = N.block(0, n + t, n, input_dim);
  sys.C = N.block(n + p, 0, output_dim, n);
  sys.D = N.block(n + p, n + t, output_dim, input_dim);
  return sys;
}

Eigen::MatrixXcd NormalizedLft::response(double omega) const {
  const int n = state_dim;
  const auto rows = N.rows() - n;
  const auto cols = N.cols() - n;
  return frequency_response(N.topLeftCorner(n, n), N.topRightCorner(n, cols), N.bottomLeftCorner(rows, n),
                            N.bottomRightCorner(rows, cols), omega);
}

NormalizedLft normalize_lft(const LftSystem& lft, bool include_dynamic) {
  lft.validate();
  const int n = lft.state_dim;
  const int nu = lft.input_dim;
  const int ny = lft.output_dim;
  const int r = lft.parameter_channels();
  const bool dyn = include_dynamic && lft.dynamic && lft.dynamic->bound > 0.0;
  const int pe = dyn ? lft.dynamic->input_dim : 0;
  const int te = dyn ? lft.dynamic->output_dim : 0;
  const int p = r + pe;
  const int t = r + te;
  const int full_t = lft.theta_dim();
  const int full_p = lft.phi_dim();

  // Index lists into the original G.
  std::vector<int> phi_rows, theta_cols, s_rows, s_cols;
  for (int i = 0; i < p; ++i) phi_rows.push_back(n + i);
  for (int j = 0; j < t; ++j) theta_cols.push_back(n + j);
  for (int i = 0; i < n; ++i) s_rows.push_back(i);
  for (int i = 0; i < ny; ++i) s_rows.push_back(n + full_p + i);
  for (int j = 0; j < n; ++j) s_cols.push_back(j);
  for (int j = 0; j < nu; ++j) s_cols.push_back(n + full_t + j);

  const Matrix m_pp = lft.G(phi_rows, theta_cols);
  const Matrix m_ps = lft.G(phi_rows, s_cols);
  const Matrix m_sp = lft.G(s_rows, theta_cols);
  const Matrix m_ss = lft.G(s_rows, s_cols);

  Matrix center = Matrix::Zero(t, p);
  Vector half = Vector::Zero(p);
  int offset = 0;
  for (const auto& block : lft.blocks) {
    for (int k = 0; k < block.repetitions; ++k) {
      center(offset + k, offset + k) = block.value_bounds.center();
      half[offset + k] = block.value_bounds.half_width();
    }
    offset += block.repetitions;
  }
  if (dyn) half.tail(pe).setConstant(lft.dynamic->bound);

  Matrix s = Matrix::Identity(p, p);
  if (p > 0) {
    Eigen::FullPivLU<Matrix> lu(Matrix::Identity(p, p) - m_pp * center);
    if (!lu.isInvertible()) throw AlgebraicLoopError("normalize_lft: loop singular at the interval centers", -1);
    s = lu.inverse();
  }
  const Matrix n_pp = half.asDiagonal() * (s * m_pp);
  const Matrix n_ps = half.asDiagonal() * (s * m_ps);
  const Matrix n_sp = m_sp + m_sp * center * s * m_pp;
  const Matrix n_ss = m_ss + m_sp * center * s * m_ps;

  NormalizedLft out;
  out.state_dim = n;
  out.input_dim = nu;
  out.output_dim = ny;
  out.N = Matrix::Zero(n + p + ny, n + t + nu);
  auto place = [&](const Matrix& src, int src_row, int src_col, int rows, int cols, int dst_row, int dst_col) {
    out.N.block(dst_row, dst_col, rows, cols) = src.block(src_row, src_col, rows, cols);
  };
  // s-rows: [x⁺ (n); y (ny)], s-cols: [x (n); u (nu)].
  place(n_ss, 0, 0, n, n, 0, 0);
  place(n_ss, 0, n, n, nu, 0, n + t);
  place(n_ss, n, 0, ny, n, n + p, 0);
  place(n_ss, n, n, ny, nu, n + p, n + t);
  place(n_sp, 0, 0, n, t, 0, n);
  place(n_sp, n, 0, ny, t, n + p, n);
  place(n_ps, 0, 0, p, n, n, 0);
  place(n_ps, 0, n, p, nu, n, n + t);
  place(n_pp, 0, 0, p, t, n, n);
  out.channel_rows.assign(static_cast<std::size_t>(r), 1);
  out.channel_cols.assign(static_cast<std::size_t>(r), 1);
  if (dyn) {
    out.channel_rows.push_back(pe);
    out.channel_cols.push_back(te);
  }
  return out;
}

namespace {

// Value and gradient in log D of phi_p = (1/2p) log sum_k sigma_k^{2p} for
// D M D^{-1}. phi_p decreases to log sigma_max as p grows and is smooth, so
// it is minimized by quasi-Newton steps before the nonsmooth polish.
struct SmoothScaling {
  const ComplexMatrix& m;
  const std::vector<int>& rows;
  const std::vector<int>& cols;
  std::vector<int> row_off;
  std::vector<int> col_off;

  ComplexMatrix scaled(const Vector& log_d) const {
    ComplexMatrix out = m;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.middleRows(row_off[i], rows[i]) *= std::exp(log_d[static_cast<Eigen::Index>(i)]);
      out.middleCols(col_off[i], cols[i]) *= std::exp(-log_d[static_cast<Eigen::Index>(i)]);
    }
    return out;
  }

  // Returns phi_p; fills the gradient over all groups and sigma_max.
  double evaluate(const Vector& log_d, double p, Vector& grad, double& top) const {
    const Eigen::JacobiSVD<ComplexMatrix> svd(scaled(log_d), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector sv = svd.singularValues();
    top = sv.size() ? sv[0] : 0.0;
    grad = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
    if (!(top > 0.0)) return -std::numeric_limits<double>::infinity();
    Vector w = (sv / top).array().pow(2.0 * p);
    const double total = w.sum();
    w /= total;
    for (std::size_t g = 0; g < rows.size(); ++g) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < sv.size(); ++k) {
        if (w[k] < 1e-16) continue;
        acc += w[k] * (svd.matrixU().col(k).segment(row_off[g], rows[g]).squaredNorm() -
                       svd.matrixV().col(k).segment(col_off[g], cols[g]).squaredNorm());
      }
      grad[static_cast<Eigen::Index>(g)] = acc;
    }
    return std::log(top) + std::log(total) / (2.0 * p);
  }
};

}  // namespace

double scaled_norm(const Eigen::MatrixXcd& m, const std::vector<int>& group_rows,
                   const std::vector<int>& group_cols, int max_sweeps, double stop_below, Vector* warm) {
  const int groups = static_cast<int>(group_rows.size());
  if (static_cast<int>(group_cols.size()) != groups) throw DomainError("scaled_norm: group counts differ");
  const double plain = largest_singular_value(m);
  if (max_sweeps <= 0 || groups < 2 || plain < stop_below) return plain;
  const auto row_off = cumulative(group_rows);
  const auto col_off = cumulative(group_cols);
  const SmoothScaling smooth{m, group_rows, group_cols, row_off, col_off};
  auto evaluate = [&](const Vector& log_d) { return largest_singular_value(smooth.scaled(log_d)); };

  // Starting points: the previous solution, and the Perron-vector scaling of
  // the block-norm matrix.
  Matrix blocks(groups, groups);
  for (int i = 0; i < groups; ++i) {
    for (int j = 0; j < groups; ++j) {
      blocks(i, j) = largest_singular_value(m.block(row_off[static_cast<std::size_t>(i)], col_off[static_cast<std::size_t>(j)],
                                                    group_rows[static_cast<std::size_t>(i)], group_cols[static_cast<std::size_t>(j)]));
    }
  }
  const double floor = 1e-8 * std::max(blocks.maxCoeff(), 1e-300);
  blocks.array() += floor;
  Vector right = Vector::Ones(groups), left = Vector::Ones(groups);
  for (int it = 0; it < 200; ++it) {
    right = (blocks * right).normalized();
    left = (blocks.transpose() * left).normalized();
  }
  Vector log_d(groups);
  for (int i = 0; i < groups; ++i) log_d[i] = 0.5 * (std::log(left[i]) - std::log(right[i]));
  log_d.array() -= log_d[groups - 1];

  double value = evaluate(log_d);
  if (!(value <= plain)) {
    log_d.setZero();
    value = plain;
  }
  if (warm && warm->size() == groups) {
    const double v = evaluate(*warm);
    if (v < value) {
      value = v;
      log_d = *warm;
    }
  }
  Vector best = log_d;
  double best_value = value;

  // Quasi-Newton on phi_p for increasing p, last coordinate held at zero.
  const int free = groups - 1;
  for (double p : {1.0, 4.0, 16.0, 64.0}) {
    if (best_value < stop_below) break;
    Vector x = best;
    Vector g;
    double top = 0.0;
    double f = smooth.evaluate(x, p, g, top);
    Matrix h = Matrix::Identity(free, free);
    for (int it = 0; it < 60; ++it) {
      const Vector gf = g.head(free);
      if (gf.norm() < 1e-10) break;
      Vector dir = -(h * gf);
      if (dir.dot(gf) >= 0.0) {
        h.setIdentity();
        dir = -gf;
      }
      double step = 1.0;
      Vector trial = x;
      Vector g_trial;
      double top_trial = 0.0;
      double f_trial = f;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls) {
        trial.head(free) = x.head(free) + step * dir;
        f_trial = smooth.evaluate(trial, p, g_trial, top_trial);
        if (f_trial <= f + 1e-4 * step * dir.dot(gf)) {
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      const Vector s_vec = trial.head(free) - x.head(free);
      const Vector y_vec = g_trial.head(free) - gf;
      const double sy = s_vec.dot(y_vec);
      if (sy > 1e-14) {
        const double rho = 1.0 / sy;
        const Matrix id = Matrix::Identity(free, free);
        h = (id - rho * s_vec * y_vec.transpose()) * h * (id - rho * y_vec * s_vec.transpose()) +
            rho * s_vec * s_vec.transpose();
      }
      const double gain = f - f_trial;
      x = trial;
      f = f_trial;
      g = g_trial;
      if (top_trial < best_value) {
        best_value = top_trial;
        best = x;
      }
      if (best_value < stop_below || gain < 1e-12) break;
    }
  }
  log_d = best;
  value = best_value;

  // Coordinate golden-section polish on sigma_max itself.
  for (int sweep = 0; sweep < max_sweeps && value >= stop_below; ++sweep) {
    const double before = value;
    for (int g = 0; g + 1 < groups && value >= stop_below; ++g) {
      const double center = log_d[g];
      auto along = [&](double x) {
        Vector trial = log_d;
        trial[g] = x;
        return evaluate(trial);
      };
      double lo = center - 0.5, hi = center + 0.5;
      double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
      double f1 = along(x1), f2 = along(x2);
      for (int it = 0; it < 20; ++it) {
        if (f1 < f2) {
          hi = x2; x2 = x1; f2 = f1;
          x1 = hi - kGolden * (hi - lo);
          f1 = along(x1);
        } else {
          lo = x1; x1 = x2; f1 = f2;
          x2 = lo + kGolden * (hi - lo);
          f2 = along(x2);
        }
      }
      const double x = f1 < f2 ? x1 : x2;
      const double fx = std::min(f1, f2);
      if (fx < value) {
        log_d[g] = x;
        value = fx;
      }
    }
    if (before - value <= 1e-7 * before) break;
  }
  if (warm) *warm = log_d;
  return value;
}

RobustGainResult robust_gain_upper_bound(const LftSystem& lft, const RobustGainOptions& options) {
  RobustGainResult result;
  const NormalizedLft norm = normalize_lft(lft, options.include_dynamic);
  const DiscreteSystem nominal = norm.nominal();
  if (nominal.A.rows() > 0) {
    const double radius = spectral_radius(nominal.A);
    if (!(radius < 1.0)) {
      std::ostringstream os;
      os << "nominal closed loop not Schur stable (spectral radius " << radius << ")";
      result.reason = os.str();
      result.gamma = std::numeric_limits<double>::infinity();
      return result;
    }
  }
  const HinfResult peak = hinf_norm_peak(nominal, 1e-8, options.grid);
  result.nominal_gain = peak.norm;
  if (norm.phi_dim() == 0 || norm.theta_dim() == 0) {
    result.gamma = peak.norm;
    result.bounded = true;
    return result;
  }

  auto omegas = frequency_grid(options.grid);
  omegas.push_back(peak.peak_frequency);
  std::sort(omegas.begin(), omegas.end());
  omegas.erase(std::unique(omegas.begin(), omegas.end()), omegas.end());

  std::vector<int> rows = norm.channel_rows;
  std::vector<int> cols = norm.channel_cols;
  rows.push_back(norm.output_dim);
  cols.push_back(norm.input_dim);
  const int p = norm.phi_dim();
  const int t = norm.theta_dim();
  std::vector<int> delta_rows(rows.begin(), rows.end() - 1);
  std::vector<int> delta_cols(cols.begin(), cols.end() - 1);
  const int sweeps = options.scaling ? options.max_sweeps : 0;

  double gamma = std::max(peak.norm, 1e-12);
  // Scalings vary smoothly with frequency, so each search starts from the
  // previous solution.
  Vector warm_full, warm_stability;
  for (double w : omegas) {
    const ComplexMatrix m = norm.response(w);
    auto feasible = [&](double g) {
      ComplexMatrix scaled = m;
      scaled.bottomRows(norm.output_dim) /= g;
      return scaled_norm(scaled, rows, cols, sweeps, 1.0, &warm_full) < 1.0;
    };
    if (feasible(gamma)) continue;
    const double stability = scaled_norm(m.topLeftCorner(p, t), delta_rows, delta_cols, sweeps, 1.0, &warm_stability);
    if (!(stability < 1.0)) {
      std::ostringstream os;
      os << "robust stability not certified at omega = " << w << " (scaled norm " << stability << ")";
      result.reason = os.str();
      result.gamma = std::numeric_limits<double>::infinity();
      return result;
    }
    double lo = gamma;
    double hi = 2.0 * gamma;
    while (!feasible(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > options.gamma_limit) {
        result.reason = "no finite gain below the limit";
        result.gamma = std::numeric_limits<double>::infinity();
        return result;
      }
    }
    while (hi - lo > options.tolerance * hi) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    gamma = hi;
  }
  if (gamma > options.gamma_limit) {
    result.reason = "no finite gain below the limit";
    result.gamma = std::numeric_limits<double>::infinity();
    return result;
  }
  result.gamma = gamma;
  result.bounded = true;
  return result;
}

int select_candidate(const std::vector<CandidateGain>& candidates, double margin) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (c.bounded_with) best = std::min(best, c.gamma_with);
  }
  if (!std::isfinite(best)) return -1;
  int chosen = -1;
  for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
    const auto& c = candidates[static_cast<std::size_t>(i)];
    if (!c.bounded_with || c.gamma_with > (1.0 + margin) * best) continue;
    if (chosen < 0) {
      chosen = i;
      continue;
    }
    const auto& cur = candidates[static_cast<std::size_t>(chosen)];
    if (c.delta_dim < cur.delta_dim || (c.delta_dim == cur.delta_dim && c.gamma_with < cur.gamma_with)) {
      chosen = i;
    }
  }
  return chosen;
}

GainReport tradeoff_report(const std::vector<TradeoffCandidate>& candidates, const Matrix& gain,
                           const RobustGainOptions& options, double margin) {
  if (candidates.empty()) throw DomainError("tradeoff_report: no candidates");
  GainReport report;
  report.selection_margin = margin;
  for (const auto& cand : candidates) {
    const auto start = std::chrono::steady_clock::now();
    CandidateGain row;
    row.label = cand.label;
    row.m = cand.m;
    row.dynamic_bound = cand.dynamic_bound;
    for (const auto& b : cand.lft.blocks) {
      row.block_sizes.push_back(b.repetitions);
      row.rate_bounds.push_back(b.rate_bounds);
    }
    row.delta_dim = cand.lft.parameter_channels();
    const LftSystem without = close_loop(cand.lft, gain);
    const auto r0 = robust_gain_upper_bound(without, options);
    row.nominal_gain = r0.nominal_gain;
    row.gamma_without = r0.gamma;
    row.bounded_without = r0.bounded;
    if (cand.dynamic_bound > 0.0) {
      const LftSystem with = close_loop(attach_output_uncertainty(cand.lft, cand.dynamic_bound), gain);
      const auto r1 = robust_gain_upper_bound(with, options);
      row.gamma_with = r1.gamma;
      row.bounded_with = r1.bounded;
      // A certificate for the loop with the dynamic block restricts to one
      // without it, so the smaller value is still a valid bound.
      if (r1.bounded && r1.gamma < row.gamma_without) {
        row.gamma_without = r1.gamma;
        row.bounded_without = true;
      }
    } else {
      row.gamma_with = r0.gamma;
      row.bounded_with = r0.bounded;
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.candidates.push_back(std::move(row));
  }
  report.selected = select_candidate(report.candidates, margin);
  return report;
}

namespace {

std::string number(double v) {
  if (!std::isfinite(v)) return "inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
  return os.str();
}

std::string rates(const std::vector<Interval>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << number(v[i].lo) << ':' << number(v[i].hi);
  return os.str();
}

}  // namespace

std::string gain_report_csv(const GainReport& report) {
  std::ostringstream os;
  os << "label,m,block_sizes,delta_dim,dynamic_bound,nominal_gain,gamma_without,gamma_with,"
        "bounded_without,bounded_with,rate_bounds,selected\n";
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const auto& c = report.candidates[i];
    os << c.label << ',' << c.m << ',' << join_ints(c.block_sizes) << ',' << c.delta_dim << ','
       << number(c.dynamic_bound) << ',' << number(c.nominal_gain) << ',' << number(c.gamma_without) << ','
       << number(c.gamma_with) << ',' << (c.bounded_without ? 1 : 0) << ',' << (c.bounded_with ? 1 : 0) << ','
       << rates(c.rate_bounds) << ',' << (static_cast<int>(i) == report.selected ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string gain_report_text(const GainReport& report) {
  auto short_number = [](double v) {
    if (!std::isfinite(v)) return std::string("inf");
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
  };
  std::ostringstream os;
  os << "Robust gain trade-off (gamma: D-scaled small-gain upper bound)\n\n";
  os << std::left << std::setw(12) << "candidate" << std::setw(5) << "m" << std::setw(14) << "blocks"
     << std::setw(6) << "dim" << std::setw(14) << "b" << std::setw(14) << "nominal" << std::setw(16)
     << "gamma w/o D_E" << std::setw(16) << "gamma w/ D_E" << "\n";
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const auto& c = report.candidates[i];
    os << std::left << std::setw(12) << c.label << std::setw(5) << c.m << std::setw(14)
       << (c.block_sizes.empty() ? "-" : join_ints(c.block_sizes)) << std::setw(6) << c.delta_dim
       << std::setw(14) << short_number(c.dynamic_bound) << std::setw(14) << short_number(c.nominal_gain)
       << std::setw(16) << short_number(c.gamma_without) << std::setw(16) << short_number(c.gamma_with)
       << (static_cast<int>(i) == report.selected ? "<- selected" : "") << "\n";
  }
  os << "\nSelection: smallest Delta dimension with gamma (with D_E) within "
     << number(100.0 * report.selection_margin) << "% of the minimum.\n";
  os << "Rate bounds are recorded but not used by the frequency-domain bound.\n";
  os << "Full-precision values are in gain_report.csv.\n";
  return os.str();
}

std::string gain_report_svg(const GainReport& report) {
  const int width = 640, height = 360, left = 60, bottom = 40, top = 30;
  double ymax = 0.0;
  for (const auto& c : report.candidates) {
    if (std::isfinite(c.gamma_with)) ymax = std::max(ymax, c.gamma_with);
    if (std::isfinite(c.gamma_without)) ymax = std::max(ymax, c.gamma_without);
  }
  if (!(ymax > 0.0)) ymax = 1.0;
  ymax *= 1.1;
  const double plot_h = height - bottom - top;
  const int count = static_cast<int>(report.candidates.size());
  const double slot = count > 0 ? static_cast<double>(width - left - 20) / count : 1.0;
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">"
     << "gamma (small-gain upper bound) per candidate</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - 10 << "\" y2=\""
     << height - bottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"5\" y=\"" << top + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">" << number(ymax)
     << "</text>\n";
  for (int i = 0; i < count; ++i) {
    const auto& c = report.candidates[static_cast<std::size_t>(i)];
    const double x0 = left + i * slot + 0.15 * slot;
    const double bw = 0.3 * slot;
    auto bar = [&](double v, double x, const char* color) {
      const double h = std::isfinite(v) ? plot_h * v / ymax : plot_h;
      os << "<rect x=\"" << x << "\" y=\"" << height - bottom - h << "\" width=\"" << bw << "\" height=\"" << h
         << "\" fill=\"" << color << "\"/>\n";
    };
    bar(c.gamma_without, x0, "#4a7ab7");
    bar(c.gamma_with, x0 + bw, "#d9822b");
    os << "<text x=\"" << x0 << "\" y=\"" << height - bottom + 16 << "\" font-family=\"sans-serif\" font-size=\"11\">"
       << c.label << "</text>\n";
  }
  os << "<rect x=\"" << width - 200 << "\" y=\"" << top << "\" width=\"10\" height=\"10\" fill=\"#4a7ab7\"/>\n";
  os << "<text x=\"" << width - 185 << "\" y=\"" << top + 9
     << "\" font-family=\"sans-serif\" font-size=\"11\">without dynamic block</text>\n";
  os << "<rect x=\"" << width - 200 << "\" y=\"" << top + 16 << "\" width=\"10\" height=\"10\" fill=\"#d9822b\"/>\n";
  os << "<text x=\"" << width - 185 << "\" y=\"" << top + 25
     << "\" font-family=\"sans-serif\" font-size=\"11\">with dynamic block</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace lftkit

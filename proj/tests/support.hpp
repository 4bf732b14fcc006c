#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "lftkit/falsify.hpp"
#include "lftkit/io.hpp"
#include "lftkit/sysid.hpp"
#include "lftkit/systems.hpp"

namespace lftkit::test {

inline Matrix random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -scale, scale);
  return m;
}

/// PNLSS model with random coefficients on a random subset of a full basis.
inline PnlssModel synthetic_pnlss(int n, int nu, int ny, int degree, std::uint64_t seed, double density = 0.5) {
  Rng rng(seed);
  DiscreteLinearModel lin;
  lin.A = 0.5 * random_matrix(n, n, rng) / n;
  lin.B = random_matrix(n, nu, rng);
  lin.C = random_matrix(ny, n, rng);
  lin.D = random_matrix(ny, nu, rng, 0.1);
  lin.tau = 0.01;
  lin.x_op = Vector::Zero(n);
  lin.u_op = Vector::Zero(nu);
  BasisSpec spec;
  spec.num_vars = n + nu;
  spec.num_state_equations = n;
  spec.max_degree = degree;
  for (int k = 0; k < n + ny; ++k) {
    std::vector<int> vars;
    for (int v = 0; v < n + nu; ++v) {
      if (uniform01(rng) < 0.8) vars.push_back(v);
    }
    spec.equation_variables.push_back(vars);
  }
  const MonomialBasis basis = build_basis(spec);
  std::vector<Vector> coefficients;
  for (int k = 0; k < basis.num_equations(); ++k) {
    Vector e = Vector::Zero(basis.block_size(k));
    for (int j = 0; j < e.size(); ++j) {
      if (uniform01(rng) < density) e[j] = uniform(rng, -1.0, 1.0);
    }
    coefficients.push_back(e);
  }
  Vector lo(n + nu), hi(n + nu);
  for (int v = 0; v < n + nu; ++v) {
    const double half = uniform(rng, 0.5, 2.0);
    const double center = uniform(rng, -0.3, 0.3);
    lo[v] = center - half;
    hi[v] = center + half;
  }
  return assemble_pnlss(lin, basis, coefficients, Hyperrectangle(lo, hi));
}

/// Pendulum or Van der Pol PNLSS fitted on the default envelope.
inline PnlssModel identified(const NonlinearSystem& sys, const Hyperrectangle& box, double tau = 0.01) {
  const auto lin = discrete_linear_model(sys, Vector::Zero(sys.state_dim), Vector::Zero(sys.input_dim), tau);
  BasisSpec spec;
  spec.num_vars = sys.state_dim + sys.input_dim;
  spec.num_state_equations = sys.state_dim;
  spec.max_degree = 3;
  spec.equation_variables = sys.equation_variables;
  const auto basis = build_basis(spec);
  const auto data = generate_discrepancy_data(sys, lin, box, basis, 2000);
  std::vector<Vector> coefficients;
  for (int k = 0; k < basis.num_equations(); ++k) {
    const auto& theta = data.regressors[static_cast<std::size_t>(k)];
    const auto& y = data.targets[static_cast<std::size_t>(k)];
    if (theta.cols() == 0) {
      coefficients.emplace_back();
      continue;
    }
    coefficients.push_back(fit_coefficients(theta, y, 1e-7 * lasso_sigma_max(theta, y)).coefficients);
  }
  return assemble_pnlss(lin, basis, coefficients, box);
}

inline Hyperrectangle box3(double a, double b, double c) {
  return Hyperrectangle(Vector::Map(std::vector<double>{-a, -b, -c}.data(), 3),
                        Vector::Map(std::vector<double>{a, b, c}.data(), 3));
}

inline PnlssModel identified_pendulum() { return identified(systems::pendulum(), box3(1, 2, 2)); }
inline PnlssModel identified_van_der_pol() { return identified(systems::van_der_pol(), box3(1.5, 2, 2)); }


/// Error system y = c / (z - a) d against a silent model; input channel d.
struct FilterBenchmark {
  double a = 0.9;
  double c = 0.5;
  SearchSpace space;
  ResponseMap reference;
  ResponseMap model;

  double hinf() const { return c / (1.0 - a); }
};

inline FilterBenchmark filter_benchmark(double a = 0.9, double c = 0.5, double horizon = 1.0) {
  FilterBenchmark b;
  b.a = a;
  b.c = c;
  b.space.signals.push_back({"d", 10, {-1.0, 1.0}, Interpolation::kPiecewiseConstant});
  b.space.horizon = horizon;
  b.space.tau = 0.01;
  b.reference = [a, c](const Matrix& d) {
    Matrix y(d.rows(), 1);
    double state = 0.0;
    for (Eigen::Index k = 0; k < d.rows(); ++k) {
      y(k, 0) = c * state;
      state = a * state + d(k, 0);
    }
    return Response{y, d};
  };
  b.model = [](const Matrix& d) { return Response{Matrix::Zero(d.rows(), 1), d}; };
  return b;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}


/// Drops the keys that record when and how long a stage ran.
inline void strip_timing(io::Json& j) {
  static const std::set<std::string> timing{"wall_time_s", "finished_at", "updated_at", "candidate_wall_time_s"};
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      if (timing.count(it.key())) {
        it = j.erase(it);
      } else {
        strip_timing(it.value());
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) strip_timing(v);
  }
}

/// Files that differ between two run directories, timing fields excepted.
inline std::vector<std::string> differing_artifacts(const std::filesystem::path& a, const std::filesystem::path& b) {
  namespace fs = std::filesystem;
  std::set<std::string> names;
  for (const auto& dir : {a, b}) {
    for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  }
  std::vector<std::string> out;
  for (const auto& name : names) {
    if (!fs::exists(a / name) || !fs::exists(b / name)) {
      out.push_back(name);
      continue;
    }
    if (name == "manifest.json") {
      auto ja = io::read_json(a / name), jb = io::read_json(b / name);
      strip_timing(ja);
      strip_timing(jb);
      if (io::dump(ja) != io::dump(jb)) out.push_back(name);
    } else if (io::read_file(a / name) != io::read_file(b / name)) {
      out.push_back(name);
    }
  }
  return out;
}

/// Runs the command line tool; returns its exit status.
inline int run_cli(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = std::string(LFTKIT_CLI) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace lftkit::test

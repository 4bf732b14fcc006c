#include "lftkit/common.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace lftkit {

namespace {

std::function<void(LogLevel, const std::string&)>& log_sink() {
  static std::function<void(LogLevel, const std::string&)> sink =
      [](LogLevel level, const std::string& message) {
        std::cerr << (level == LogLevel::kWarning ? "warning: " : "") << message << "\n";
      };
  return sink;
}

}  // namespace

void log_message(LogLevel level, const std::string& message) {
  if (const auto& sink = log_sink()) sink(level, message);
}

void set_log_sink(std::function<void(LogLevel, const std::string&)> sink) {
  log_sink() = std::move(sink);
}

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return static_cast<std::size_t>(r % n);
}

double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace lftkit

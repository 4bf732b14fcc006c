#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lftkit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;
using Rng = std::mt19937_64;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateDimensionError : public Error {
 public:
  using Error::Error;
};

class LinearizationError : public Error {
 public:
  using Error::Error;
};

/// Simulation blew up; carries the time (seconds) at which the state norm
/// crossed the divergence threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// (I - Delta * G11) singular at a simulation step.
class AlgebraicLoopError : public Error {
 public:
  AlgebraicLoopError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class StabilizabilityError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double gap)
      : Error(what), gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_;
};

class InstabilityError : public Error {
 public:
  InstabilityError(const std::string& what, double spectral_radius)
      : Error(what), spectral_radius_(spectral_radius) {}
  double spectral_radius() const { return spectral_radius_; }

 private:
  double spectral_radius_;
};

class InsufficientCoverageError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage needs an artifact that has not been produced yet.
class DependencyError : public Error {
 public:
  DependencyError(const std::string& what, std::string file)
      : Error(what), file_(std::move(file)) {}
  const std::string& file() const { return file_; }

 private:
  std::string file_;
};

/// A stored artifact violates one of the checked invariants.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::string invariant)
      : Error(what), invariant_(std::move(invariant)) {}
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

// Portable random draws. The standard distributions are implementation
// defined, so artifacts would differ across standard libraries.

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal draw (Box-Muller, one value per call).
double standard_normal(Rng& rng);

/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Deterministic Fisher-Yates shuffle driven by uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(first[i - 1], first[uniform_index(rng, i)]);
  }
}

enum class LogLevel { kInfo, kWarning };

/// Sends a diagnostic line to the active log sink (stderr by default).
void log_message(LogLevel level, const std::string& message);

/// Replaces the log sink; an empty function silences logging.
void set_log_sink(std::function<void(LogLevel, const std::string&)> sink);

/// Largest absolute eigenvalue.
double spectral_radius(const Matrix& a);

}  // namespace lftkit

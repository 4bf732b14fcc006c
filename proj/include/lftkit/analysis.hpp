#pragma once

#include <string>
#include <vector>

#include "lftkit/lft_system.hpp"

namespace lftkit {

/// Discrete-time LTI system x⁺ = A x + B u, y = C x + D u.
struct DiscreteSystem {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
};

/// Frequencies in [0, pi]: half logarithmically spaced towards zero, half
/// linear, merged and sorted. Always contains 0 and pi.
std::vector<double> frequency_grid(int points);

/// Largest singular value of C (e^{jw} I - A)^{-1} B + D.
double max_singular_value(const DiscreteSystem& sys, double omega);

struct HinfResult {
  double norm = 0.0;
  double peak_frequency = 0.0;  ///< rad/sample
};

/// Grid search followed by golden-section refinement around the grid peak
/// until the relative change in the value drops below `tolerance`.
/// Throws InstabilityError when A is not Schur.
HinfResult hinf_norm_peak(const DiscreteSystem& sys, double tolerance = 1e-6, int grid = 512);
double hinf_norm(const DiscreteSystem& sys, double tolerance = 1e-6, int grid = 512);

/// Closed loop of the LFT under u = -K x + d; d replaces u as the input.
/// Dynamic-block inputs follow the substitution as well.
LftSystem close_loop(const LftSystem& lft, const Matrix& gain);

/// LFT whose uncertainty blocks all have unit norm: each parameter channel
/// is rescaled by its interval half-width after the interval center has
/// been folded into the nominal part, and the dynamic block by its bound.
/// Row layout [x⁺; phi; y], column layout [x; theta; u].
struct NormalizedLft {
  int state_dim = 0;
  int input_dim = 0;
  int output_dim = 0;
  Matrix N;
  /// Sizes of the scaling groups along phi/theta: one entry per parameter
  /// channel, then (if present) the dynamic block as (rows, cols).
  std::vector<int> channel_rows;
  std::vector<int> channel_cols;
  int phi_dim() const;
  int theta_dim() const;
  DiscreteSystem nominal() const;
  /// Frequency response of the full map [theta; u] -> [phi; y].
  Eigen::MatrixXcd response(double omega) const;
};

NormalizedLft normalize_lft(const LftSystem& lft, bool include_dynamic = true);

struct RobustGainOptions {
  double tolerance = 1e-4;  ///< relative bisection tolerance
  int grid = 512;
  int max_sweeps = 50;
  bool scaling = true;  ///< false: plain small gain with D = I
  double gamma_limit = 1e6;
  bool include_dynamic = true;
};

struct RobustGainResult {
  double gamma = 0.0;
  bool bounded = false;
  double nominal_gain = 0.0;  ///< H-infinity norm at the interval centers
  std::string reason;         ///< why the result is unbounded
};

/// D-scaled small-gain upper bound on the worst-case l2 gain u -> y over
/// all unit-norm uncertainties, checked on a frequency grid.
RobustGainResult robust_gain_upper_bound(const LftSystem& lft, const RobustGainOptions& options = {});

/// min over the admissible diagonal scalings of sigma_max(D M D^{-1}), with
/// M split into the given row/column groups (the last group keeps D = 1).
/// Stops early once the value drops below `stop_below`. `warm` (log D per
/// group) seeds the search when its size matches and receives the result.
double scaled_norm(const Eigen::MatrixXcd& m, const std::vector<int>& group_rows,
                   const std::vector<int>& group_cols, int max_sweeps, double stop_below = 0.0,
                   Vector* warm = nullptr);

struct CandidateGain {
  std::string label;
  int m = 0;
  std::vector<int> block_sizes;
  int delta_dim = 0;  ///< parameter channels
  double dynamic_bound = 0.0;
  double nominal_gain = 0.0;
  double gamma_with = 0.0;
  bool bounded_with = false;
  double gamma_without = 0.0;
  bool bounded_without = false;
  std::vector<Interval> rate_bounds;
  double wall_time = 0.0;  ///< seconds; kept out of the report files
};

struct GainReport {
  std::vector<CandidateGain> candidates;
  int selected = -1;
  double selection_margin = 0.15;
};

struct TradeoffCandidate {
  std::string label;
  int m = 0;
  LftSystem lft;  ///< open-loop LFT without a dynamic block
  double dynamic_bound = 0.0;
};

/// Robust gains of every candidate's closed loop under u = -K x + d, with
/// the dynamic block at its bound and without it. Selects the smallest
/// Delta dimension whose gamma-with-Delta_E is within the margin of the
/// best one.
GainReport tradeoff_report(const std::vector<TradeoffCandidate>& candidates, const Matrix& gain,
                           const RobustGainOptions& options = {}, double margin = 0.15);

/// Selection rule on already computed gains.
int select_candidate(const std::vector<CandidateGain>& candidates, double margin);

std::string gain_report_csv(const GainReport& report);
std::string gain_report_text(const GainReport& report);
std::string gain_report_svg(const GainReport& report);

}  // namespace lftkit

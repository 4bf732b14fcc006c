#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lftkit/dynamics.hpp"
#include "lftkit/envelope.hpp"
#include "lftkit/io.hpp"

namespace lftkit {

struct SystemConfig {
  std::string name = "pendulum";  ///< pendulum | vanderpol | plugin
  std::string command;            ///< plugin command line
  double g_over_l = 9.81;
  double damping = 0.5;
  double mu = 1.0;
  std::vector<double> x_op;  ///< empty: zero
  std::vector<double> u_op;
};

struct IdentifyConfig {
  int max_degree = 3;
  std::vector<int> variable_caps;
  std::vector<std::vector<int>> equation_variables;  ///< empty: system default
  int samples = 2000;
  /// Regularization grid as fractions of the per-equation sigma_max.
  std::vector<double> sigma_grid;
};

struct GendataConfig {
  int budget = 200;
  double min_spread = 1.0;
  long target_samples = 2000;
  int stride = 10;
  double horizon = 10.0;
  int control_points = 10;
};

/// Value used in CfnnConfig::m to denote the full parameter count l.
inline constexpr int kFullParameterCount = -1;

struct CfnnConfig {
  std::vector<int> m{0, 1, kFullParameterCount};
  std::vector<int> hidden;  ///< widths of extra tanh layers before the bottleneck
  double learning_rate = 1e-3;
  int batch_size = 128;
  double sigma_bar = 1e-6;
  int patience = 50;
  int max_epochs = 5000;
  /// Independent initializations per m; the best validation loss wins.
  int restarts = 1;
};

struct BoundConfig {
  int budget = 200;
  double horizon = 30.0;
  int control_points = 10;
  std::vector<double> amplitude;  ///< per input channel; empty: input half-width
  double safety_factor = 1.25;
};

struct AnalysisConfig {
  double tolerance = 1e-4;
  int grid = 512;
  int max_sweeps = 50;
  double margin = 0.15;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  double tau = 0.01;
  SystemConfig system;
  std::vector<double> envelope_lower;  ///< over [x; u]; empty: system default
  std::vector<double> envelope_upper;
  std::vector<std::string> labels;
  IdentifyConfig identify;
  std::vector<int> priority;  ///< factoring order override
  std::vector<double> lqr_q;  ///< diagonal weights; empty: ones
  std::vector<double> lqr_r;
  GendataConfig gendata;
  CfnnConfig cfnn;
  BoundConfig bound;
  AnalysisConfig analysis;

  /// Throws DomainError on inconsistent values.
  void validate() const;
};

/// Default relative sigma grid: 15 log-spaced fractions from 1e-7 to 1e-1.
std::vector<double> default_sigma_grid();

io::Json config_to_json(const PipelineConfig& config);
/// Fills defaults for missing keys; unknown keys are rejected.
PipelineConfig config_from_json(const io::Json& j);

/// TOML file, or a JSON file (a run manifest's "config" entry is accepted).
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_toml_config(const std::string& text);

/// Parses "0,1,l" into CfnnConfig::m values.
std::vector<int> parse_m_list(const std::string& text);

}  // namespace lftkit

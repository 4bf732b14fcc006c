#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lftkit/lpvlft.hpp"

namespace lftkit {

/// Sampled (x̄, ū) points with the id of the run each sample came from.
struct TrainingSet {
  Matrix samples;            ///< one w = (x̄, ū) per row
  std::vector<int> run_ids;  ///< per row
  double validation_fraction = 0.2;

  long size() const { return static_cast<long>(samples.rows()); }
  /// Rows of (train, validation). Whole runs go to one side: with runs
  /// listed in first-appearance order, every k-th run (k = round(1 /
  /// fraction)) is held out. A single run leaves the validation side empty.
  std::pair<std::vector<int>, std::vector<int>> split() const;
};

/// Cascade network: fixed selector W1 (w -> upsilon), tanh encoder layers
/// ending at the bottleneck mu, affine decoder mu -> rho_hat.
struct Cfnn {
  Matrix selection;             ///< W1, l x (n + n_u)
  std::vector<Matrix> weights;  ///< encoder layers, then the decoder
  std::vector<Vector> biases;
  std::uint64_t seed = 0;

  int num_parameters() const { return static_cast<int>(selection.rows()); }
  int bottleneck() const;
  int encoder_layers() const { return static_cast<int>(weights.size()) - 1; }
  const Matrix& decoder_weight() const { return weights.back(); }
  const Vector& decoder_bias() const { return biases.back(); }

  /// Encoder applied to a parameter vector rho (= upsilon).
  Vector encode(const Vector& rho) const;
  Vector decode(const Vector& mu) const;
};

struct CfnnForward {
  Vector upsilon;
  std::vector<Vector> activations;  ///< c[2..n_e]; the last one is mu
  Vector mu;
  Vector rho_hat;
};

/// Encoder widths for n_e = hidden.size() + 2; the final encoder layer has
/// width m. Weights get Glorot-uniform values from the seed, biases zero.
Cfnn make_cfnn(const Matrix& selection, int m, const std::vector<int>& hidden, std::uint64_t seed);

CfnnForward forward(const Cfnn& net, const Vector& w);

/// ||(M(upsilon) - M(rho_hat)) w||^2 for one sample.
double sample_loss(const Cfnn& net, const LpvModel& lpv, const Vector& w);

/// Mean sample loss over the given rows plus sigma_bar * sum ||W[k]||_F^2.
double objective(const Cfnn& net, const LpvModel& lpv, const Matrix& samples,
                 const std::vector<int>& rows, double sigma_bar);

struct CfnnGradient {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// Gradient of `objective` with respect to every trainable weight and bias.
CfnnGradient gradients(const Cfnn& net, const LpvModel& lpv, const Matrix& samples,
                       const std::vector<int>& rows, double sigma_bar);

struct CfnnTrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 128;
  double sigma_bar = 1e-6;
  int patience = 50;
  int max_epochs = 5000;
  std::uint64_t seed = 0;  ///< shuffling
};

struct TrainHistory {
  std::vector<double> train_loss;       ///< T_L per epoch (mean sample loss)
  std::vector<double> validation_loss;  ///< V_L per epoch
  double initial_train_loss = 0.0;
  int best_epoch = -1;  ///< -1: the initial weights were never improved on
  double best_validation_loss = 0.0;
};

/// Adam on shuffled minibatches with early stopping on the validation loss.
/// Returns the best-validation weights. Throws DivergenceError (time =
/// epoch index) if the loss becomes non-finite.
Cfnn train(const Cfnn& initial, const LpvModel& lpv, const TrainingSet& data,
           const CfnnTrainConfig& config, TrainHistory* history = nullptr);

struct CfnnMaps {
  std::function<Vector(const Vector&)> encoder;  ///< rho -> mu
  Matrix decoder_weight;
  Vector decoder_bias;
};

CfnnMaps export_maps(const Cfnn& net);

/// Bounds of mu: min/max of the encoder over `samples` Halton points of the
/// parameter box, widened by `inflation` of the half-width. Rate bounds come
/// from consecutive samples of each run in `trajectories` (same widening);
/// with no trajectory data they default to +/- the value range.
ParameterSet mu_parameter_set(const CfnnMaps& maps, const ParameterSet& rho_set,
                              const TrainingSet* trajectories, const Matrix& selection,
                              int samples = 100000, double inflation = 0.05);

}  // namespace lftkit

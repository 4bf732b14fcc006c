#include "lftkit/cfnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace lftkit {

std::pair<std::vector<int>, std::vector<int>> TrainingSet::split() const {
  std::vector<int> order;  // run ids in first-appearance order
  std::map<int, int> position;
  for (int id : run_ids) {
    if (position.emplace(id, static_cast<int>(order.size())).second) order.push_back(id);
  }
  const int period = validation_fraction > 0.0
                         ? std::max(2, static_cast<int>(std::lround(1.0 / validation_fraction)))
                         : 0;
  std::vector<int> train, validation;
  for (int i = 0; i < static_cast<int>(run_ids.size()); ++i) {
    const int pos = position[run_ids[static_cast<std::size_t>(i)]];
    const bool held_out = period > 0 && order.size() > 1 && pos % period == period - 1;
    (held_out ? validation : train).push_back(i);
  }
  return {train, validation};
}

int Cfnn::bottleneck() const {
  return weights.size() < 2 ? 0 : static_cast<int>(weights[weights.size() - 2].rows());
}

Vector Cfnn::encode(const Vector& rho) const {
  Vector c = rho;
  for (int k = 0; k < encoder_layers(); ++k) {
    c = (weights[static_cast<std::size_t>(k)] * c + biases[static_cast<std::size_t>(k)])
            .array()
            .tanh()
            .matrix();
  }
  return c;
}

Vector Cfnn::decode(const Vector& mu) const { return decoder_weight() * mu + decoder_bias(); }

Cfnn make_cfnn(const Matrix& selection, int m, const std::vector<int>& hidden, std::uint64_t seed) {
  const int l = static_cast<int>(selection.rows());
  if (m < 1 || m > l) throw DomainError("make_cfnn: bottleneck width must be in [1, l]");
  Cfnn net;
  net.selection = selection;
  net.seed = seed;
  std::vector<int> widths{l};
  for (int h : hidden) {
    if (h < 1) throw DomainError("make_cfnn: hidden widths must be positive");
    widths.push_back(h);
  }
  widths.push_back(m);
  widths.push_back(l);
  Rng rng(seed);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const int fan_in = widths[k];
    const int fan_out = widths[k + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i) {
      for (int j = 0; j < fan_in; ++j) w(i, j) = uniform(rng, -limit, limit);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(fan_out));
  }
  return net;
}

CfnnForward forward(const Cfnn& net, const Vector& w) {
  CfnnForward out;
  out.upsilon = net.selection * w;
  Vector c = out.upsilon;
  for (int k = 0; k < net.encoder_layers(); ++k) {
    c = (net.weights[static_cast<std::size_t>(k)] * c + net.biases[static_cast<std::size_t>(k)])
            .array()
            .tanh()
            .matrix();
    out.activations.push_back(c);
  }
  out.mu = c;
  out.rho_hat = net.decode(c);
  return out;
}

double sample_loss(const Cfnn& net, const LpvModel& lpv, const Vector& w) {
  const auto f = forward(net, w);
  return (lpv.apply(f.upsilon, w) - lpv.apply(f.rho_hat, w)).squaredNorm();
}

namespace {

double regularization(const Cfnn& net) {
  double total = 0.0;
  for (const auto& w : net.weights) total += w.squaredNorm();
  return total;
}

double mean_loss(const Cfnn& net, const LpvModel& lpv, const Matrix& samples,
                 const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (int i : rows) total += sample_loss(net, lpv, samples.row(i).transpose());
  return total / static_cast<double>(rows.size());
}

CfnnGradient zero_gradient(const Cfnn& net) {
  CfnnGradient g;
  for (const auto& w : net.weights) g.weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& b : net.biases) g.biases.push_back(Vector::Zero(b.size()));
  return g;
}

// Accumulates the per-sample gradient of the (unregularized) loss sum and
// returns the summed loss.
double accumulate(const Cfnn& net, const LpvModel& lpv, const Matrix& samples,
                  const std::vector<int>& rows, CfnnGradient& g) {
  const std::size_t dec = net.weights.size() - 1;
  double total = 0.0;
  for (int i : rows) {
    const Vector w = samples.row(i).transpose();
    const auto f = forward(net, w);
    const Vector r = lpv.apply(f.upsilon, w) - lpv.apply(f.rho_hat, w);
    total += r.squaredNorm();
    const Vector d_rho_hat = -2.0 * lpv.apply_jacobian(f.rho_hat, w).transpose() * r;
    g.weights[dec] += d_rho_hat * f.mu.transpose();
    g.biases[dec] += d_rho_hat;
    Vector upstream = net.weights[dec].transpose() * d_rho_hat;
    for (int k = net.encoder_layers() - 1; k >= 0; --k) {
      const auto kk = static_cast<std::size_t>(k);
      const Vector& c = f.activations[kk];
      const Vector delta = upstream.cwiseProduct((1.0 - c.array().square()).matrix());
      const Vector& below = k == 0 ? f.upsilon : f.activations[kk - 1];
      g.weights[kk] += delta * below.transpose();
      g.biases[kk] += delta;
      upstream = net.weights[kk].transpose() * delta;
    }
  }
  return total;
}

CfnnGradient batch_gradient(const Cfnn& net, const LpvModel& lpv, const Matrix& samples,
                            const std::vector<int>& rows, double sigma_bar, double* loss) {
  CfnnGradient g = zero_gradient(net);
  const double total = accumulate(net, lpv, samples, rows, g);
  const double scale = rows.empty() ? 0.0 : 1.0 / static_cast<double>(rows.size());
  for (std::size_t k = 0; k < g.weights.size(); ++k) {
    g.weights[k] = g.weights[k] * scale + 2.0 * sigma_bar * net.weights[k];
    g.biases[k] *= scale;
  }
  if (loss) *loss = total * scale;
  return g;
}

}  // namespace

double objective(const Cfnn& net, const LpvModel& lpv, const Matrix& samples,
                 const std::vector<int>& rows, double sigma_bar) {
  return mean_loss(net, lpv, samples, rows) + sigma_bar * regularization(net);
}

CfnnGradient gradients(const Cfnn& net, const LpvModel& lpv, const Matrix& samples,
                       const std::vector<int>& rows, double sigma_bar) {
  return batch_gradient(net, lpv, samples, rows, sigma_bar, nullptr);
}

Cfnn train(const Cfnn& initial, const LpvModel& lpv, const TrainingSet& data,
           const CfnnTrainConfig& config, TrainHistory* history) {
  auto [train_rows, validation_rows] = data.split();
  if (static_cast<long>(data.size()) < 2L * config.batch_size) {
    throw DomainError("train: need at least two minibatches of samples, have " +
                      std::to_string(data.size()));
  }
  const auto& monitor = validation_rows.empty() ? train_rows : validation_rows;

  Cfnn net = initial;
  Cfnn best = initial;
  TrainHistory local;
  TrainHistory& h = history ? *history : local;
  h = TrainHistory{};
  h.initial_train_loss = mean_loss(net, lpv, data.samples, train_rows);
  h.best_validation_loss = mean_loss(net, lpv, data.samples, monitor);

  CfnnGradient m1 = zero_gradient(net);
  CfnnGradient m2 = zero_gradient(net);
  long step = 0;
  Rng rng(config.seed);
  int since_best = 0;
  std::vector<int> order = train_rows;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<int> batch(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop));
      double batch_loss = 0.0;
      const auto g = batch_gradient(net, lpv, data.samples, batch, config.sigma_bar, &batch_loss);
      epoch_loss += batch_loss * static_cast<double>(batch.size());
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      auto adam = [&](auto& param, auto& first, auto& second, const auto& grad) {
        first = config.beta1 * first + (1.0 - config.beta1) * grad;
        second = config.beta2 * second + (1.0 - config.beta2) * grad.cwiseProduct(grad);
        param.array() -= config.learning_rate * (first.array() / c1) /
                         ((second.array() / c2).sqrt() + config.epsilon);
      };
      for (std::size_t k = 0; k < net.weights.size(); ++k) {
        adam(net.weights[k], m1.weights[k], m2.weights[k], g.weights[k]);
        adam(net.biases[k], m1.biases[k], m2.biases[k], g.biases[k]);
      }
    }
    const double train_loss = epoch_loss / static_cast<double>(order.size());
    const double validation_loss = mean_loss(net, lpv, data.samples, monitor);
    if (!std::isfinite(train_loss) || !std::isfinite(validation_loss)) {
      throw DivergenceError("CFNN training diverged in epoch " + std::to_string(epoch),
                            static_cast<double>(epoch));
    }
    h.train_loss.push_back(train_loss);
    h.validation_loss.push_back(validation_loss);
    if (validation_loss < h.best_validation_loss) {
      h.best_validation_loss = validation_loss;
      h.best_epoch = epoch;
      best = net;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return best;
}

CfnnMaps export_maps(const Cfnn& net) {
  CfnnMaps maps;
  maps.encoder = [net](const Vector& rho) { return net.encode(rho); };
  maps.decoder_weight = net.decoder_weight();
  maps.decoder_bias = net.decoder_bias();
  return maps;
}

ParameterSet mu_parameter_set(const CfnnMaps& maps, const ParameterSet& rho_set,
                              const TrainingSet* trajectories, const Matrix& selection,
                              int samples, double inflation) {
  const int l = rho_set.size();
  const int m = static_cast<int>(maps.decoder_weight.cols());
  Vector lo(l), hi(l);
  for (int i = 0; i < l; ++i) {
    lo[i] = rho_set.value_bounds[static_cast<std::size_t>(i)].lo;
    hi[i] = rho_set.value_bounds[static_cast<std::size_t>(i)].hi;
  }
  Vector mu_lo = Vector::Constant(m, std::numeric_limits<double>::infinity());
  Vector mu_hi = -mu_lo;
  const Matrix points = halton_sample(l, samples, Hyperrectangle(lo, hi));
  for (int s = 0; s < points.rows(); ++s) {
    const Vector mu = maps.encoder(points.row(s).transpose());
    mu_lo = mu_lo.cwiseMin(mu);
    mu_hi = mu_hi.cwiseMax(mu);
  }
  ParameterSet out;
  for (int j = 0; j < m; ++j) {
    const double c = 0.5 * (mu_lo[j] + mu_hi[j]);
    const double half = 0.5 * (mu_hi[j] - mu_lo[j]) * (1.0 + inflation);
    out.value_bounds.push_back({c - half, c + half});
  }
  Vector rate = Vector::Zero(m);
  bool have_rates = false;
  if (trajectories && trajectories->size() > 1) {
    const auto& data = *trajectories;
    Vector previous;
    for (long i = 0; i < data.size(); ++i) {
      const Vector mu = maps.encoder(selection * data.samples.row(i).transpose());
      if (i > 0 && data.run_ids[static_cast<std::size_t>(i)] == data.run_ids[static_cast<std::size_t>(i - 1)]) {
        rate = rate.cwiseMax((mu - previous).cwiseAbs());
        have_rates = true;
      }
      previous = mu;
    }
  }
  for (int j = 0; j < m; ++j) {
    const double r = have_rates ? rate[j] * (1.0 + inflation)
                                : out.value_bounds[static_cast<std::size_t>(j)].width();
    out.rate_bounds.push_back({-r, r});
  }
  return out;
}

}  // namespace lftkit

#include "lftkit/falsify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lftkit {

int SearchSpace::dim() const {
  int d = static_cast<int>(scalars.size());
  for (const auto& s : signals) d += s.control_points;
  return d;
}

long SearchSpace::steps() const {
  if (!(tau > 0.0)) throw DomainError("search space: tau must be positive");
  return std::max(1L, std::lround(horizon / tau));
}

void SearchSpace::validate() const {
  auto check = [](const Interval& iv, const std::string& what) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw DomainError("search space: invalid bounds for " + what);
    }
  };
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    check(scalars[i], i < scalar_names.size() ? scalar_names[i] : "scalar " + std::to_string(i));
  }
  for (const auto& s : signals) {
    check(s.bounds, s.name);
    if (s.control_points < 1) throw DomainError("search space: channel " + s.name + " needs a control point");
  }
  if (!(horizon > 0.0) || !(tau > 0.0)) throw DomainError("search space: horizon and tau must be positive");
}

Vector SearchSpace::lower() const {
  Vector lo(dim());
  int k = 0;
  for (const auto& s : scalars) lo[k++] = s.lo;
  for (const auto& s : signals) {
    for (int j = 0; j < s.control_points; ++j) lo[k++] = s.bounds.lo;
  }
  return lo;
}

Vector SearchSpace::upper() const {
  Vector hi(dim());
  int k = 0;
  for (const auto& s : scalars) hi[k++] = s.hi;
  for (const auto& s : signals) {
    for (int j = 0; j < s.control_points; ++j) hi[k++] = s.bounds.hi;
  }
  return hi;
}

Vector SearchSpace::from_unit(const Vector& unit) const {
  const Vector lo = lower();
  return lo + (upper() - lo).cwiseProduct(unit);
}

Vector SearchSpace::scalar_values(const Vector& point) const {
  return point.head(static_cast<Eigen::Index>(scalars.size()));
}

Matrix SearchSpace::signal_values(const Vector& point) const {
  const long n = steps();
  Matrix out(n, static_cast<Eigen::Index>(signals.size()));
  int offset = static_cast<int>(scalars.size());
  for (std::size_t c = 0; c < signals.size(); ++c) {
    const auto& s = signals[c];
    const int p = s.control_points;
    for (long k = 0; k < n; ++k) {
      double value;
      if (s.interpolation == Interpolation::kPiecewiseConstant || p == 1) {
        const long idx = std::min<long>(p - 1, k * p / n);
        value = point[offset + idx];
      } else {
        const double t = n > 1 ? static_cast<double>(k) * (p - 1) / static_cast<double>(n - 1) : 0.0;
        const int i0 = std::min(p - 2, static_cast<int>(std::floor(t)));
        const double frac = t - i0;
        value = (1.0 - frac) * point[offset + i0] + frac * point[offset + i0 + 1];
      }
      out(k, static_cast<Eigen::Index>(c)) = value;
    }
    offset += p;
  }
  return out;
}

namespace {

struct Evaluation {
  double value;
  bool failed;
  std::string message;
};

Evaluation evaluate(const FalsificationTask& task, const Vector& point) {
  try {
    const double v = task.oracle(point);
    if (!std::isfinite(v)) return {std::numeric_limits<double>::quiet_NaN(), true, "non-finite objective"};
    return {v, false, {}};
  } catch (const Error& e) {
    return {std::numeric_limits<double>::quiet_NaN(), true, e.what()};
  }
}

Vector uniform_unit(Rng& rng, int d) {
  Vector u(d);
  for (int i = 0; i < d; ++i) u[i] = uniform01(rng);
  return u;
}

// Reflects into [0, 1] (then clamps, for steps larger than the box).
double reflect(double v) {
  if (v < 0.0) v = -v;
  if (v > 1.0) v = 2.0 - v;
  return std::clamp(v, 0.0, 1.0);
}

void record_best(FalsificationResult& result, const EvaluationRecord& rec) {
  if (rec.failed) return;
  if (!result.found || rec.value > result.best_value) {
    result.found = true;
    result.best_value = rec.value;
    result.best_point = rec.point;
  }
}

}  // namespace

FalsificationResult optimize(const FalsificationTask& task) {
  if (task.budget < 1) throw DomainError("optimize: budget must be at least 1");
  task.space.validate();
  const int d = task.space.dim();
  const auto& cfg = task.annealing;
  const int restarts = std::max(1, std::min(cfg.restarts, task.budget));
  const int segment = (task.budget + restarts - 1) / restarts;

  Rng rng(task.seed);
  FalsificationResult result;
  Vector current_unit;
  double current_value = 0.0;
  bool have_current = false;

  for (int eval = 0; eval < task.budget; ++eval) {
    const int restart = eval / segment;
    const int t = eval % segment;
    const double progress = segment > 1 ? static_cast<double>(t) / (segment - 1) : 0.0;
    if (t == 0) have_current = false;

    Vector unit;
    if (!have_current) {
      unit = uniform_unit(rng, d);
    } else {
      const double step = cfg.initial_step * std::pow(cfg.final_step / cfg.initial_step, progress);
      unit = current_unit;
      for (int i = 0; i < d; ++i) unit[i] = reflect(unit[i] + step * standard_normal(rng));
    }
    const Vector point = task.space.from_unit(unit);
    const auto ev = evaluate(task, point);

    EvaluationRecord rec;
    rec.restart = restart;
    rec.point = point;
    rec.value = ev.value;
    rec.failed = ev.failed;
    rec.message = ev.message;
    if (!ev.failed) {
      if (!have_current) {
        rec.accepted = true;
      } else {
        const double delta = ev.value - current_value;
        const double scale = std::max(std::abs(result.found ? result.best_value : current_value), 1e-300);
        const double temperature =
            cfg.initial_temperature * std::pow(cfg.final_temperature / cfg.initial_temperature, progress) * scale;
        // The draw happens for every non-improving move so the random
        // stream does not depend on floating-point ties.
        const double draw = uniform01(rng);
        rec.accepted = delta >= 0.0 || draw < std::exp(delta / temperature);
      }
      if (rec.accepted) {
        current_unit = unit;
        current_value = ev.value;
        have_current = true;
      }
    }
    record_best(result, rec);
    result.log.push_back(std::move(rec));
  }
  return result;
}

FalsificationResult random_search(const FalsificationTask& task) {
  if (task.budget < 1) throw DomainError("random_search: budget must be at least 1");
  task.space.validate();
  Rng rng(task.seed);
  FalsificationResult result;
  for (int eval = 0; eval < task.budget; ++eval) {
    const Vector point = task.space.from_unit(uniform_unit(rng, task.space.dim()));
    const auto ev = evaluate(task, point);
    EvaluationRecord rec;
    rec.point = point;
    rec.value = ev.value;
    rec.failed = ev.failed;
    rec.message = ev.message;
    rec.accepted = !ev.failed;
    record_best(result, rec);
    result.log.push_back(std::move(rec));
  }
  return result;
}

std::string evaluation_log_csv(const FalsificationResult& result, const SearchSpace& space) {
  std::ostringstream os;
  os.precision(17);
  os << "index,restart";
  for (const auto& name : space.scalar_names) os << ',' << name;
  for (std::size_t i = space.scalar_names.size(); i < space.scalars.size(); ++i) os << ",s" << i + 1;
  for (const auto& s : space.signals) {
    for (int j = 0; j < s.control_points; ++j) os << ',' << s.name << '_' << j + 1;
  }
  os << ",value,accepted,failed\n";
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const auto& r = result.log[i];
    os << i << ',' << r.restart;
    for (int j = 0; j < r.point.size(); ++j) os << ',' << r.point[j];
    os << ',';
    if (r.failed) {
      os << "nan";
    } else {
      os << r.value;
    }
    os << ',' << (r.accepted ? 1 : 0) << ',' << (r.failed ? 1 : 0) << '\n';
  }
  return os.str();
}

double error_gain_ratio(const ResponseMap& reference, const ResponseMap& model,
                        const Matrix& disturbance) {
  if (!(disturbance.norm() > 0.0)) throw DomainError("error gain: zero disturbance, ratio undefined");
  const Response ref = reference(disturbance);
  const double input_norm = ref.inputs.norm();
  if (!(input_norm > 0.0)) throw DomainError("error gain: zero plant input, ratio undefined");
  const Response mod = model(disturbance);
  if (ref.outputs.rows() != mod.outputs.rows() || ref.outputs.cols() != mod.outputs.cols()) {
    throw DomainError("error gain: output histories differ in shape");
  }
  return (ref.outputs - mod.outputs).norm() / input_norm;
}

BoundResult bound_dynamic_uncertainty(const ResponseMap& reference, const ResponseMap& model,
                                      const SearchSpace& space, int budget, double safety_factor,
                                      const AnnealingConfig& annealing, std::uint64_t seed) {
  if (!(safety_factor >= 1.0)) throw DomainError("bound: safety factor must be at least 1");
  FalsificationTask task;
  task.space = space;
  task.budget = budget;
  task.annealing = annealing;
  task.seed = seed;
  task.oracle = [&](const Vector& point) {
    return error_gain_ratio(reference, model, space.signal_values(point));
  };
  BoundResult out;
  out.safety_factor = safety_factor;
  out.search = optimize(task);
  out.raw_maximum = out.search.found ? out.search.best_value : 0.0;
  out.bound = out.raw_maximum * safety_factor;
  return out;
}

ResponseMap nonlinear_response(const NonlinearSystem& sys, const DiscreteLinearModel& lin,
                               const Matrix& gain, const Hyperrectangle& envelope, int substeps) {
  return [sys, lin, gain, envelope, substeps](const Matrix& disturbance) {
    std::function<bool(const Vector&, const Vector&)> outside;
    if (envelope.dim() > 0) {
      outside = [&envelope](const Vector& x, const Vector& u) {
        Vector w(x.size() + u.size());
        w << x, u;
        return !envelope.contains(w, 1e-12);
      };
    }
    const Vector x0 = Vector::Zero(sys.state_dim);
    auto traj = simulate_nonlinear_closed_loop(sys, lin, gain, x0, disturbance, substeps, outside);
    if (traj.steps() < disturbance.rows()) {
      throw Error("closed loop left the envelope at step " + std::to_string(traj.steps()));
    }
    return Response{traj.outputs, traj.inputs};
  };
}

ResponseMap lft_response(const LftSystem& lft, const Matrix& gain,
                         std::function<Vector(const Vector&)> scheduler) {
  return [lft, gain, scheduler](const Matrix& disturbance) {
    const auto sched = [&scheduler](const Vector& x, const Vector& u) {
      Vector w(x.size() + u.size());
      w << x, u;
      return scheduler(w);
    };
    const auto traj = simulate_lft_closed_loop(lft, sched, gain, disturbance, Vector::Zero(lft.state_dim));
    Matrix inputs(disturbance.rows(), disturbance.cols());
    for (Eigen::Index k = 0; k < disturbance.rows(); ++k) {
      inputs.row(k) = (-gain * traj.states.row(k).transpose() + disturbance.row(k).transpose()).transpose();
    }
    return Response{traj.outputs, inputs};
  };
}

double spread_metric(const Trajectory& run, const Hyperrectangle& envelope) {
  double total = 0.0;
  const long steps = run.steps();
  for (long k = 0; k < steps; ++k) {
    Vector w(run.states.cols() + run.inputs.cols());
    w << run.states.row(k).transpose(), run.inputs.row(k).transpose();
    if (envelope.contains(w)) total += run.states.row(k).squaredNorm();
  }
  return total;
}

Matrix run_samples(const Trajectory& run, const Hyperrectangle& envelope, int stride) {
  stride = std::max(1, stride);
  std::vector<Vector> kept;
  long inside = 0;
  for (long k = 0; k < run.steps(); ++k) {
    Vector w(run.states.cols() + run.inputs.cols());
    w << run.states.row(k).transpose(), run.inputs.row(k).transpose();
    if (!envelope.contains(w)) continue;
    if (inside++ % stride == 0) kept.push_back(std::move(w));
  }
  Matrix out(static_cast<Eigen::Index>(kept.size()), envelope.dim());
  for (std::size_t i = 0; i < kept.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();
  return out;
}

std::vector<int> greedy_ml2_selection(const std::vector<Matrix>& groups, long target_samples,
                                      std::vector<double>* history) {
  std::vector<int> chosen;
  if (groups.empty()) return chosen;
  const int dim = static_cast<int>(groups.front().cols());
  Ml2Accumulator acc(dim);
  const std::size_t g = groups.size();
  std::vector<double> linear(g), self(g), cross(g, 0.0);
  std::vector<bool> used(g, false);
  for (std::size_t i = 0; i < g; ++i) {
    linear[i] = Ml2Accumulator::linear_sum(groups[i]);
    self[i] = Ml2Accumulator::cross_sum(groups[i], groups[i]);
  }
  while (acc.count() < target_samples) {
    int best = -1;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g; ++i) {
      if (used[i] || groups[i].rows() == 0) continue;
      const double v = acc.discrepancy_with(groups[i].rows(), linear[i], self[i], cross[i]);
      if (v < best_value) {
        best_value = v;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    if (acc.count() > 0 && !(best_value < acc.discrepancy())) break;
    const auto b = static_cast<std::size_t>(best);
    acc.add(groups[b].rows(), linear[b], self[b], cross[b]);
    used[b] = true;
    chosen.push_back(best);
    if (history) history->push_back(acc.discrepancy());
    for (std::size_t i = 0; i < g; ++i) {
      if (!used[i]) cross[i] += Ml2Accumulator::cross_sum(groups[b], groups[i]);
    }
  }
  return chosen;
}

CoverageResult generate_coverage_data(const std::function<Trajectory(const Vector&)>& simulate,
                                      const Hyperrectangle& envelope, const SearchSpace& space,
                                      const CoverageConfig& config) {
  CoverageResult out;
  std::vector<Matrix> database;  // raw (x̄, ū) rows per accepted run
  FalsificationTask task;
  task.space = space;
  task.budget = config.budget;
  task.annealing = config.annealing;
  task.seed = config.seed;
  task.oracle = [&](const Vector& point) {
    double v = std::numeric_limits<double>::quiet_NaN();
    try {
      const Trajectory run = simulate(point);
      v = spread_metric(run, envelope);
      if (v >= config.min_spread && v > 0.0) {
        Matrix samples = run_samples(run, envelope, config.stride);
        if (samples.rows() > 0) database.push_back(std::move(samples));
      }
    } catch (...) {
      out.run_spread.push_back(v);
      throw;
    }
    out.run_spread.push_back(v);
    return v;
  };
  out.search = optimize(task);
  out.database_runs = static_cast<int>(database.size());
  if (database.empty()) {
    std::ostringstream os;
    os << "no simulation run reached the spread threshold L_v = " << config.min_spread
       << " within " << config.budget << " runs; lower L_v or enlarge the search space";
    throw InsufficientCoverageError(os.str());
  }
  std::vector<Matrix> unit;
  unit.reserve(database.size());
  for (const auto& d : database) {
    unit.push_back(normalize_to_unit(d, envelope).cwiseMax(0.0).cwiseMin(1.0));
  }
  out.selected_runs = greedy_ml2_selection(unit, config.target_samples, &out.ml2_history);

  long total = 0;
  for (int r : out.selected_runs) total += database[static_cast<std::size_t>(r)].rows();
  out.data.samples.resize(total, envelope.dim());
  out.data.run_ids.reserve(static_cast<std::size_t>(total));
  long row = 0;
  for (int r : out.selected_runs) {
    const auto& d = database[static_cast<std::size_t>(r)];
    out.data.samples.middleRows(row, d.rows()) = d;
    row += d.rows();
    out.data.run_ids.insert(out.data.run_ids.end(), static_cast<std::size_t>(d.rows()), r);
  }
  return out;
}

}  // namespace lftkit

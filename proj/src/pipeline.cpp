#include "lftkit/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>

#include "lftkit/io.hpp"
#include "lftkit/systems.hpp"

namespace lftkit {

namespace fs = std::filesystem;
using io::Json;

NonlinearSystem make_system(const PipelineConfig& config) {
  const auto& s = config.system;
  if (s.name == "pendulum") return systems::pendulum(s.g_over_l, s.damping);
  if (s.name == "vanderpol") return systems::van_der_pol(s.mu);
  if (s.name == "plugin") return systems::plugin(s.command);
  throw DomainError("unknown system '" + s.name + "'");
}

Hyperrectangle make_envelope(const PipelineConfig& config, const NonlinearSystem& sys) {
  const int nv = sys.state_dim + sys.input_dim;
  std::vector<std::string> labels = config.labels;
  if (labels.empty()) {
    labels = sys.state_labels;
    labels.insert(labels.end(), sys.input_labels.begin(), sys.input_labels.end());
  }
  if (static_cast<int>(labels.size()) != nv) labels.clear();
  if (!config.envelope_lower.empty()) {
    if (static_cast<int>(config.envelope_lower.size()) != nv) {
      throw DomainError("config: envelope must have " + std::to_string(nv) + " entries (states, then inputs)");
    }
    return Hyperrectangle(Eigen::Map<const Vector>(config.envelope_lower.data(), nv),
                          Eigen::Map<const Vector>(config.envelope_upper.data(), nv), labels);
  }
  if (config.system.name == "pendulum") {
    return Hyperrectangle(Vector::Map(std::vector<double>{-1.0, -2.0, -2.0}.data(), 3),
                          Vector::Map(std::vector<double>{1.0, 2.0, 2.0}.data(), 3), labels);
  }
  if (config.system.name == "vanderpol") {
    return Hyperrectangle(Vector::Map(std::vector<double>{-1.5, -2.0, -2.0}.data(), 3),
                          Vector::Map(std::vector<double>{1.5, 2.0, 2.0}.data(), 3), labels);
  }
  throw DomainError("config: the envelope is required for plugin systems");
}

std::vector<int> resolve_m_list(const std::vector<int>& m, int l) {
  std::set<int> values;
  for (int v : m) {
    const int resolved = v == kFullParameterCount ? l : v;
    if (resolved < 0 || resolved > l) {
      throw DomainError("reduced parameter count " + std::to_string(resolved) + " outside [0, " +
                        std::to_string(l) + "]");
    }
    values.insert(resolved);
  }
  return {values.begin(), values.end()};
}

StageSeeds derive_seeds(std::uint64_t seed) {
  StageSeeds s;
  s.gendata = seed * 1000 + 1;
  s.cfnn_base = seed * 1000 + 100;
  s.bound = seed * 1000 + 3;
  return s;
}

std::function<Vector(const Vector&)> candidate_scheduler(const LpvModel& full, int m, const Cfnn* net) {
  const int l = full.num_parameters();
  if (m == 0) return [](const Vector&) { return Vector(); };
  const Matrix selection = full.selection();
  if (m == l) return [selection](const Vector& w) { return Vector(selection * w); };
  if (!net) throw DomainError("scheduler: a trained network is needed for m = " + std::to_string(m));
  return [selection, copy = *net](const Vector& w) { return copy.encode(selection * w); };
}

namespace {

std::string m_file(const std::string& stem, int m, const std::string& ext) {
  return stem + "_m" + std::to_string(m) + ext;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix diagonal_weights(const std::vector<double>& w, int size) {
  if (w.empty()) return Matrix::Identity(size, size);
  if (static_cast<int>(w.size()) != size) throw DomainError("config: controller weight length mismatch");
  return Eigen::Map<const Vector>(w.data(), size).asDiagonal();
}

Vector operating_point(const std::vector<double>& v, int size) {
  if (v.empty()) return Vector::Zero(size);
  if (static_cast<int>(v.size()) != size) throw DomainError("config: operating point length mismatch");
  return Eigen::Map<const Vector>(v.data(), size);
}

std::string compiler_string() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

Pipeline::Pipeline(PipelineConfig config, fs::path out_dir) : config_(std::move(config)), out_(std::move(out_dir)) {
  config_.validate();
  fs::create_directories(out_);
}

const std::vector<std::string>& Pipeline::stage_names() {
  static const std::vector<std::string> names{"identify", "lpvify", "lftize", "gendata", "reduce", "bound", "analyze"};
  return names;
}

std::vector<int> Pipeline::m_values(int l) const { return resolve_m_list(config_.cfnn.m, l); }

void Pipeline::record(const std::string& stage, double seconds, const std::vector<std::string>& artifacts,
                      Json extra) {
  Json manifest;
  const auto file = path("manifest.json");
  if (fs::exists(file)) {
    try {
      manifest = io::read_json(file);
    } catch (const Error&) {
      manifest = Json::object();
    }
  }
  if (!manifest.is_object()) manifest = Json::object();
  const auto seeds = derive_seeds(config_.seed);
  Json stages = manifest.contains("stages") ? manifest["stages"] : Json::object();
  Json entry{{"wall_time_s", seconds}, {"artifacts", artifacts}, {"finished_at", utc_timestamp()}};
  if (!extra.is_null()) entry["details"] = extra;
  stages[stage] = entry;
  Json out{{"tool", "lftkit"},
           {"version", LFTKIT_VERSION},
           {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
           {"compiler", compiler_string()},
           {"seed", config_.seed},
           {"derived_seeds", {{"gendata", seeds.gendata}, {"cfnn_base", seeds.cfnn_base}, {"bound", seeds.bound}}},
           {"config", config_to_json(config_)},
           {"stages", stages},
           {"updated_at", utc_timestamp()}};
  io::write_file(file, io::dump(out));
}

void Pipeline::identify() {
  const auto start = std::chrono::steady_clock::now();
  const NonlinearSystem sys = make_system(config_);
  const Hyperrectangle box = make_envelope(config_, sys);
  const DiscreteLinearModel lin =
      discrete_linear_model(sys, operating_point(config_.system.x_op, sys.state_dim),
                            operating_point(config_.system.u_op, sys.input_dim), config_.tau);

  BasisSpec spec;
  spec.num_vars = sys.state_dim + sys.input_dim;
  spec.num_state_equations = sys.state_dim;
  spec.max_degree = config_.identify.max_degree;
  spec.variable_caps = config_.identify.variable_caps;
  spec.equation_variables = config_.identify.equation_variables.empty()
                                ? detect_equation_variables(sys, lin, box)
                                : config_.identify.equation_variables;
  const MonomialBasis basis = build_basis(spec);
  log_message(LogLevel::kInfo, "identify: " + std::to_string(basis.total_size()) + " monomials, " +
                                   std::to_string(config_.identify.samples) + " samples");
  const DiscrepancyData data = generate_discrepancy_data(sys, lin, box, basis, config_.identify.samples);

  std::vector<Vector> coefficients;
  std::vector<double> sigmas;
  std::vector<ParetoResult> pareto;
  Json per_equation = Json::array();
  for (int k = 0; k < basis.num_equations(); ++k) {
    const Matrix& theta = data.regressors[static_cast<std::size_t>(k)];
    const Vector& y = data.targets[static_cast<std::size_t>(k)];
    const double sigma_max = theta.cols() > 0 ? lasso_sigma_max(theta, y) : 0.0;
    if (theta.cols() == 0 || !(sigma_max > 0.0)) {
      coefficients.push_back(Vector::Zero(theta.cols()));
      sigmas.push_back(0.0);
      pareto.push_back({});
      per_equation.push_back(Json{{"equation", k + 1}, {"sigma_max", sigma_max}, {"selected_sigma", 0.0}});
      continue;
    }
    std::vector<double> grid;
    for (double r : config_.identify.sigma_grid) grid.push_back(r * sigma_max);
    std::sort(grid.begin(), grid.end());
    ParetoResult sweep = pareto_sweep(theta, y, grid);
    const auto& chosen = sweep.rows[static_cast<std::size_t>(sweep.selected)];
    const auto refit = fit_coefficients(theta, y, chosen.sigma, {}, &chosen.coefficients);
    coefficients.push_back(refit.coefficients);
    sigmas.push_back(chosen.sigma);
    per_equation.push_back(Json{{"equation", k + 1},
                                {"sigma_max", sigma_max},
                                {"selected_sigma", chosen.sigma},
                                {"support", (refit.coefficients.array() != 0.0).count()}});
    pareto.push_back(std::move(sweep));
  }
  const PnlssModel model = assemble_pnlss(lin, basis, std::move(coefficients), box, std::move(sigmas));
  io::write_file(path("pnlss.json"), io::dump(io::to_json(model)));
  io::write_file(path("pareto.csv"), io::pareto_csv(pareto));

  const Matrix q = diagonal_weights(config_.lqr_q, sys.state_dim);
  const Matrix r = diagonal_weights(config_.lqr_r, sys.input_dim);
  const Matrix gain = lqr_state_feedback(lin.A, lin.B, q, r);
  io::write_file(path("controller.json"),
                 io::dump(Json{{"K", io::matrix_to_json(gain)}, {"Q", io::matrix_to_json(q)}, {"R", io::matrix_to_json(r)}}));
  record("identify", seconds_since(start), {"pnlss.json", "pareto.csv", "controller.json"},
         Json{{"system", sys.name}, {"dropped_samples", data.dropped}, {"equations", per_equation}});
}

void Pipeline::lpvify() {
  const auto start = std::chrono::steady_clock::now();
  const PnlssModel model = io::pnlss_from_json(io::read_json(path("pnlss.json")));
  std::vector<int> priority = config_.priority;
  if (priority.empty()) {
    priority = default_priority(active_basis(model), model.envelope);
  } else if (static_cast<int>(priority.size()) != model.basis.num_vars) {
    throw DomainError("config: lpv.priority must list all " + std::to_string(model.basis.num_vars) + " variables");
  }
  const LpvModel lpv = factorize(model, priority);
  io::write_file(path("lpv.json"), io::dump(io::to_json(lpv)));
  record("lpvify", seconds_since(start), {"lpv.json"},
         Json{{"priority", priority}, {"parameters", lpv.parameter_names}, {"terms", lpv.terms.size()}});
}

void Pipeline::lftize() {
  const auto start = std::chrono::steady_clock::now();
  const LpvModel lpv = io::lpv_from_json(io::read_json(path("lpv.json")));
  const LftSystem lft = lft_realize(lpv);
  io::write_file(path("lft.json"), io::dump(io::to_json(lft)));
  std::vector<int> reps;
  for (const auto& b : lft.blocks) reps.push_back(b.repetitions);
  record("lftize", seconds_since(start), {"lft.json"}, Json{{"repetitions", reps}});
}

void Pipeline::gendata() {
  const auto start = std::chrono::steady_clock::now();
  const PnlssModel model = io::pnlss_from_json(io::read_json(path("pnlss.json")));
  const Matrix gain = io::matrix_from_json(io::read_json(path("controller.json")).at("K"));
  const NonlinearSystem sys = make_system(config_);
  const auto& box = model.envelope;
  const int n = sys.state_dim;

  SearchSpace space;
  space.tau = model.linear.tau;
  space.horizon = config_.gendata.horizon;
  for (int i = 0; i < n; ++i) {
    space.scalar_names.push_back(i < static_cast<int>(box.labels.size()) ? box.labels[static_cast<std::size_t>(i)] + "_0"
                                                                         : "x" + std::to_string(i + 1) + "_0");
    space.scalars.push_back({box.lower[i], box.upper[i]});
  }
  for (int j = 0; j < sys.input_dim; ++j) {
    SignalChannel ch;
    const auto idx = static_cast<std::size_t>(n + j);
    ch.name = idx < box.labels.size() ? "d_" + box.labels[idx] : "d" + std::to_string(j + 1);
    ch.control_points = config_.gendata.control_points;
    ch.bounds = {box.lower[n + j], box.upper[n + j]};
    space.signals.push_back(ch);
  }
  const auto lin = model.linear;
  auto simulate = [&](const Vector& point) {
    return simulate_nonlinear_closed_loop(sys, lin, gain, space.scalar_values(point), space.signal_values(point));
  };
  CoverageConfig cov;
  cov.budget = config_.gendata.budget;
  cov.min_spread = config_.gendata.min_spread;
  cov.target_samples = config_.gendata.target_samples;
  cov.stride = config_.gendata.stride;
  cov.seed = derive_seeds(config_.seed).gendata;
  const CoverageResult result = generate_coverage_data(simulate, box, space, cov);

  io::write_file(path("training_set.csv"), io::training_set_csv(result.data, box.labels));
  Json spreads = Json::array();
  for (double v : result.run_spread) spreads.push_back(io::number(v));
  Json history = Json::array();
  for (double v : result.ml2_history) history.push_back(v);
  io::write_file(path("training_set.json"),
                 io::dump(Json{{"samples", result.data.size()},
                               {"columns", box.labels},
                               {"validation_fraction", result.data.validation_fraction},
                               {"split", "by run"},
                               {"database_runs", result.database_runs},
                               {"selected_runs", result.selected_runs},
                               {"ml2_history", history},
                               {"run_spread", spreads},
                               {"min_spread", cov.min_spread},
                               {"stride", cov.stride},
                               {"selection_rule", "greedy ML2 decrease (substitute for uniform gridding)"},
                               {"seed", cov.seed}}));
  io::write_file(path("coverage_log.csv"), evaluation_log_csv(result.search, space));
  record("gendata", seconds_since(start), {"training_set.csv", "training_set.json", "coverage_log.csv"},
         Json{{"samples", result.data.size()}, {"runs", result.selected_runs.size()}});
}

void Pipeline::reduce() {
  const auto start = std::chrono::steady_clock::now();
  const LpvModel lpv = io::lpv_from_json(io::read_json(path("lpv.json")));
  const TrainingSet data = io::training_set_from_csv(io::read_file(path("training_set.csv")));
  const int l = lpv.num_parameters();
  const auto seeds = derive_seeds(config_.seed);
  std::vector<std::string> artifacts;
  Json details = Json::array();
  for (int m : m_values(l)) {
    LpvModel reduced;
    Json info{{"m", m}};
    if (m == l) {
      reduced = lpv;
    } else if (m == 0) {
      reduced = reduced_lpv(lpv, Matrix::Zero(l, 0), Vector::Zero(l), ParameterSet{});
    } else {
      CfnnTrainConfig tc;
      tc.learning_rate = config_.cfnn.learning_rate;
      tc.batch_size = config_.cfnn.batch_size;
      tc.sigma_bar = config_.cfnn.sigma_bar;
      tc.patience = config_.cfnn.patience;
      tc.max_epochs = config_.cfnn.max_epochs;
      std::optional<Cfnn> net;
      TrainHistory history;
      Json attempts = Json::array();
      for (int r = 0; r < config_.cfnn.restarts; ++r) {
        tc.seed = seeds.cfnn(m) + 7919 * static_cast<std::uint64_t>(r);
        const Cfnn initial = make_cfnn(lpv.selection(), m, config_.cfnn.hidden, tc.seed);
        TrainHistory h;
        Cfnn trained = train(initial, lpv, data, tc, &h);
        attempts.push_back(Json{{"seed", tc.seed}, {"best_validation_loss", io::number(h.best_validation_loss)}});
        if (!net || h.best_validation_loss < history.best_validation_loss) {
          net = std::move(trained);
          history = std::move(h);
        }
      }
      info["attempts"] = attempts;
      const CfnnMaps maps = export_maps(*net);
      const ParameterSet mu_set = mu_parameter_set(maps, lpv.parameters, &data, lpv.selection());
      reduced = reduced_lpv(lpv, maps.decoder_weight, maps.decoder_bias, mu_set);
      io::write_file(path(m_file("cfnn", m, ".json")), io::dump(io::to_json(*net, &history)));
      artifacts.push_back(m_file("cfnn", m, ".json"));
      info["epochs"] = history.train_loss.size();
      info["best_validation_loss"] = io::number(history.best_validation_loss);
      log_message(LogLevel::kInfo, "reduce: m = " + std::to_string(m) + " trained for " +
                                       std::to_string(history.train_loss.size()) + " epochs");
    }
    const LftSystem lft = lft_realize(reduced);
    io::write_file(path(m_file("lpv", m, ".json")), io::dump(io::to_json(reduced)));
    io::write_file(path(m_file("lft", m, ".json")), io::dump(io::to_json(lft)));
    artifacts.push_back(m_file("lpv", m, ".json"));
    artifacts.push_back(m_file("lft", m, ".json"));
    info["channels"] = lft.parameter_channels();
    details.push_back(info);
  }
  record("reduce", seconds_since(start), artifacts, Json{{"l", l}, {"candidates", details}});
}

void Pipeline::bound() {
  const auto start = std::chrono::steady_clock::now();
  const PnlssModel model = io::pnlss_from_json(io::read_json(path("pnlss.json")));
  const Matrix gain = io::matrix_from_json(io::read_json(path("controller.json")).at("K"));
  const LpvModel lpv = io::lpv_from_json(io::read_json(path("lpv.json")));
  const NonlinearSystem sys = make_system(config_);
  const int l = lpv.num_parameters();
  const int n = sys.state_dim;
  const auto& box = model.envelope;

  SearchSpace space;
  space.tau = model.linear.tau;
  space.horizon = config_.bound.horizon;
  for (int j = 0; j < sys.input_dim; ++j) {
    double amp = 0.5 * (box.upper[n + j] - box.lower[n + j]);
    if (!config_.bound.amplitude.empty()) {
      if (static_cast<int>(config_.bound.amplitude.size()) != sys.input_dim) {
        throw DomainError("config: bound.amplitude needs one entry per input");
      }
      amp = config_.bound.amplitude[static_cast<std::size_t>(j)];
    }
    SignalChannel ch;
    ch.name = "d" + std::to_string(j + 1);
    ch.control_points = config_.bound.control_points;
    ch.bounds = {-amp, amp};
    space.signals.push_back(ch);
  }
  const ResponseMap reference = nonlinear_response(sys, model.linear, gain, box);
  const std::uint64_t seed = derive_seeds(config_.seed).bound;

  std::vector<std::string> artifacts;
  Json candidates = Json::array();
  for (int m : m_values(l)) {
    const LftSystem lft = io::lft_from_json(io::read_json(path(m_file("lft", m, ".json"))));
    std::optional<Cfnn> net;
    if (m > 0 && m < l) net = io::cfnn_from_json(io::read_json(path(m_file("cfnn", m, ".json"))));
    const ResponseMap candidate = lft_response(lft, gain, candidate_scheduler(lpv, m, net ? &*net : nullptr));
    const BoundResult result =
        bound_dynamic_uncertainty(reference, candidate, space, config_.bound.budget, config_.bound.safety_factor, {}, seed);
    io::write_file(path(m_file("bound_log", m, ".csv")), evaluation_log_csv(result.search, space));
    artifacts.push_back(m_file("bound_log", m, ".csv"));
    long failed = 0;
    for (const auto& rec : result.search.log) failed += rec.failed ? 1 : 0;
    candidates.push_back(Json{{"m", m},
                              {"bound", io::number(result.bound)},
                              {"raw_maximum", io::number(result.raw_maximum)},
                              {"failed_evaluations", failed},
                              {"best_point", io::vector_to_json(result.search.best_point)}});
    log_message(LogLevel::kInfo, "bound: m = " + std::to_string(m) + " -> b = " + std::to_string(result.bound));
  }
  io::write_file(path("bounds.json"), io::dump(Json{{"safety_factor", config_.bound.safety_factor},
                                                    {"budget", config_.bound.budget},
                                                    {"horizon", config_.bound.horizon},
                                                    {"seed", seed},
                                                    {"candidates", candidates}}));
  artifacts.insert(artifacts.begin(), "bounds.json");
  record("bound", seconds_since(start), artifacts);
}

void Pipeline::analyze() {
  const auto start = std::chrono::steady_clock::now();
  io::read_file(path("lft.json"));  // the unreduced realization must exist
  const Matrix gain = io::matrix_from_json(io::read_json(path("controller.json")).at("K"));
  const Json bounds = io::read_json(path("bounds.json"));
  std::vector<TradeoffCandidate> candidates;
  for (const auto& entry : bounds.at("candidates")) {
    const int m = entry.at("m").get<int>();
    TradeoffCandidate c;
    c.label = "m=" + std::to_string(m);
    c.m = m;
    c.lft = io::lft_from_json(io::read_json(path(m_file("lft", m, ".json"))));
    c.dynamic_bound = io::to_double(entry.at("bound"));
    candidates.push_back(std::move(c));
  }
  RobustGainOptions options;
  options.tolerance = config_.analysis.tolerance;
  options.grid = config_.analysis.grid;
  options.max_sweeps = config_.analysis.max_sweeps;
  const GainReport report = tradeoff_report(candidates, gain, options, config_.analysis.margin);
  io::write_file(path("gain_report.csv"), gain_report_csv(report));
  io::write_file(path("gain_report.txt"), gain_report_text(report));
  io::write_file(path("gain_report.svg"), gain_report_svg(report));
  Json times = Json::object();
  for (const auto& c : report.candidates) times[c.label] = c.wall_time;
  record("analyze", seconds_since(start), {"gain_report.csv", "gain_report.txt", "gain_report.svg"},
         Json{{"candidate_wall_time_s", times}, {"selected", report.selected}});
}

std::vector<InvariantCheck> Pipeline::validate() {
  std::vector<InvariantCheck> checks;
  auto add = [&](std::string id, std::string description, const std::function<std::string()>& body,
                 const std::vector<std::string>& needs) {
    InvariantCheck c;
    c.id = std::move(id);
    c.description = std::move(description);
    for (const auto& f : needs) {
      if (!fs::exists(path(f))) {
        c.skipped = true;
        c.detail = "missing " + f;
      }
    }
    if (!c.skipped) {
      try {
        c.detail = body();
        c.passed = c.detail.empty();
      } catch (const std::exception& e) {
        c.passed = false;
        c.detail = e.what();
      }
    }
    checks.push_back(std::move(c));
  };
  if (!fs::exists(path("pnlss.json"))) {
    throw DependencyError("validate: no artifacts found (missing " + path("pnlss.json").string() + ")",
                          path("pnlss.json").string());
  }

  add("roundtrip", "every JSON artifact re-serializes byte-identically", [&]() -> std::string {
    std::vector<std::pair<std::string, std::function<std::string(const Json&)>>> kinds{
        {"pnlss.json", [](const Json& j) { return io::dump(io::to_json(io::pnlss_from_json(j))); }},
        {"lpv.json", [](const Json& j) { return io::dump(io::to_json(io::lpv_from_json(j))); }},
        {"lft.json", [](const Json& j) { return io::dump(io::to_json(io::lft_from_json(j))); }},
    };
    for (const auto& entry : fs::directory_iterator(out_)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("lpv_m", 0) == 0) kinds.push_back({name, [](const Json& j) { return io::dump(io::to_json(io::lpv_from_json(j))); }});
      if (name.rfind("lft_m", 0) == 0) kinds.push_back({name, [](const Json& j) { return io::dump(io::to_json(io::lft_from_json(j))); }});
    }
    std::sort(kinds.begin(), kinds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [name, rewrite] : kinds) {
      if (!fs::exists(path(name))) continue;
      const std::string text = io::read_file(path(name));
      if (rewrite(Json::parse(text)) != text) return name + " does not round-trip";
      if (io::dump(Json::parse(text)) != text) return name + " is not in canonical form";
    }
    if (fs::exists(path("training_set.csv"))) {
      const std::string text = io::read_file(path("training_set.csv"));
      const auto data = io::training_set_from_csv(text);
      const auto header = text.substr(0, text.find('\n'));
      std::vector<std::string> labels;
      std::istringstream hs(header);
      std::string cell;
      std::getline(hs, cell, ',');
      while (std::getline(hs, cell, ',')) labels.push_back(cell);
      if (io::training_set_csv(data, labels) != text) return "training_set.csv does not round-trip";
    }
    return {};
  }, {});

  add("basis", "monomials have total degree >= 2 and respect the equation variable subsets", [&]() -> std::string {
    const auto model = io::pnlss_from_json(io::read_json(path("pnlss.json")));
    for (const auto& block : model.basis.blocks) {
      for (int j = 0; j < block.rows(); ++j) {
        if (block.row(j).sum() < 2) return "monomial of degree below 2";
        if (block.row(j).minCoeff() < 0) return "negative exponent";
      }
    }
    for (int k = 0; k < model.basis.num_equations(); ++k) {
      if (model.coefficients[static_cast<std::size_t>(k)].size() != model.basis.block_size(k)) {
        return "coefficient count differs from the basis size in equation " + std::to_string(k + 1);
      }
    }
    return {};
  }, {"pnlss.json"});

  add("factorization", "LPV residual reproduces the PNLSS residual within 1e-12", [&]() -> std::string {
    const auto model = io::pnlss_from_json(io::read_json(path("pnlss.json")));
    const auto lpv = io::lpv_from_json(io::read_json(path("lpv.json")));
    const int n = model.state_dim();
    const Matrix pts = halton_sample(model.envelope.dim(), 500, model.envelope, 7919);
    for (int i = 0; i < pts.rows(); ++i) {
      const Vector w = pts.row(i).transpose();
      const Vector direct = model.residual(w.head(n), w.tail(model.input_dim()));
      const Vector via = lpv_residual(lpv, w);
      for (int k = 0; k < direct.size(); ++k) {
        if (std::abs(direct[k] - via[k]) > 1e-12) return "deviation at sample " + std::to_string(i);
      }
    }
    return {};
  }, {"pnlss.json", "lpv.json"});

  add("lft", "closed LFT equals the LPV matrices on the parameter box within 1e-10", [&]() -> std::string {
    const auto lpv = io::lpv_from_json(io::read_json(path("lpv.json")));
    const auto lft = io::lft_from_json(io::read_json(path("lft.json")));
    int reps = 0;
    for (const auto& b : lft.blocks) reps += b.repetitions;
    if (reps != lft.parameter_channels() || lft.num_parameters() != lpv.num_parameters()) return "block descriptor mismatch";
    if (lpv.num_parameters() == 0) {
      return (evaluate_lft(lft, Vector()) - lpv.evaluate(Vector())).cwiseAbs().maxCoeff() < 1e-10 ? "" : "nominal mismatch";
    }
    Vector lo(lpv.num_parameters()), hi(lpv.num_parameters());
    for (int i = 0; i < lpv.num_parameters(); ++i) {
      lo[i] = lpv.parameters.value_bounds[static_cast<std::size_t>(i)].lo;
      hi[i] = lpv.parameters.value_bounds[static_cast<std::size_t>(i)].hi;
    }
    const Matrix pts = halton_sample(lpv.num_parameters(), 500, Hyperrectangle(lo, hi));
    for (int i = 0; i < pts.rows(); ++i) {
      const Vector rho = pts.row(i).transpose();
      if ((evaluate_lft(lft, rho) - lpv.evaluate(rho)).cwiseAbs().maxCoeff() > 1e-10) {
        return "deviation at sample " + std::to_string(i);
      }
    }
    return {};
  }, {"lpv.json", "lft.json"});

  add("training_set", "training samples lie inside the envelope", [&]() -> std::string {
    const auto model = io::pnlss_from_json(io::read_json(path("pnlss.json")));
    const auto data = io::training_set_from_csv(io::read_file(path("training_set.csv")));
    for (long i = 0; i < data.size(); ++i) {
      if (!model.envelope.contains(data.samples.row(i).transpose(), 1e-12)) return "sample " + std::to_string(i) + " outside";
    }
    return {};
  }, {"pnlss.json", "training_set.csv"});

  add("cfnn", "networks have unit selector rows and an affine decoder into l parameters", [&]() -> std::string {
    for (const auto& entry : fs::directory_iterator(out_)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("cfnn_m", 0) != 0) continue;
      const Json j = io::read_json(entry.path());
      const Cfnn net = io::cfnn_from_json(j);
      for (int i = 0; i < net.selection.rows(); ++i) {
        const auto row = net.selection.row(i);
        if ((row.array() == 1.0).count() != 1 || (row.array() == 0.0).count() != row.size() - 1) {
          return name + ": selection row " + std::to_string(i) + " is not a unit selector";
        }
      }
      if (j.at("layers").back().at("activation") != "linear") return name + ": decoder is not linear";
      if (net.decoder_weight().rows() != net.num_parameters()) return name + ": decoder output size";
      if (net.bottleneck() >= net.num_parameters()) return name + ": bottleneck not below l";
    }
    return {};
  }, {});

  add("gains", "gamma with the dynamic block is at least gamma without it", [&]() -> std::string {
    std::istringstream in(io::read_file(path("gain_report.csv")));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) cells.push_back(cell);
      if (cells.size() < 8) return "malformed row";
      const double without = cells[6] == "inf" ? INFINITY : std::stod(cells[6]);
      const double with = cells[7] == "inf" ? INFINITY : std::stod(cells[7]);
      if (with < without) return cells[0] + ": gamma with < gamma without";
    }
    return {};
  }, {"gain_report.csv"});
  return checks;
}

void Pipeline::run_stage(const std::string& name) {
  if (name == "identify") return identify();
  if (name == "lpvify") return lpvify();
  if (name == "lftize") return lftize();
  if (name == "gendata") return gendata();
  if (name == "reduce") return reduce();
  if (name == "bound") return bound();
  if (name == "analyze") return analyze();
  throw DomainError("unknown stage '" + name + "'");
}

void Pipeline::run_all(const std::string& from) {
  const auto& names = stage_names();
  auto it = std::find(names.begin(), names.end(), from);
  if (it == names.end()) throw DomainError("unknown stage '" + from + "'");
  for (; it != names.end(); ++it) {
    log_message(LogLevel::kInfo, "stage " + *it);
    run_stage(*it);
  }
}

}  // namespace lftkit

#include "lftkit/config.hpp"

#include <cmath>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace lftkit {

namespace {

using io::Json;

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw DomainError("config: [" + where + "] must be a table");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) throw DomainError("config: unknown key '" + key + "' in [" + where + "]");
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DomainError(std::string("config: bad value for '") + key + "'");
  }
}

Json m_to_json(const std::vector<int>& m) {
  Json out = Json::array();
  for (int v : m) {
    if (v == kFullParameterCount) {
      out.push_back("l");
    } else {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<int> m_from_json(const Json& j) {
  std::vector<int> out;
  for (const auto& v : j) {
    if (v.is_string() && v.get<std::string>() == "l") {
      out.push_back(kFullParameterCount);
    } else if (v.is_number_integer()) {
      out.push_back(v.get<int>());
    } else {
      throw DomainError("config: cfnn.m entries must be integers or \"l\"");
    }
  }
  return out;
}

}  // namespace

std::vector<double> default_sigma_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 15; ++i) grid.push_back(std::pow(10.0, -7.0 + 6.0 * i / 14.0));
  return grid;
}

void PipelineConfig::validate() const {
  if (!(tau > 0.0)) throw DomainError("config: tau must be positive");
  if (system.name != "pendulum" && system.name != "vanderpol" && system.name != "plugin") {
    throw DomainError("config: unknown system '" + system.name + "'");
  }
  if (system.name == "plugin" && system.command.empty()) throw DomainError("config: plugin system needs a command");
  if (envelope_lower.size() != envelope_upper.size()) {
    throw DomainError("config: envelope lower and upper differ in length");
  }
  for (std::size_t i = 0; i < envelope_lower.size(); ++i) {
    if (!(envelope_lower[i] < envelope_upper[i])) throw DomainError("config: envelope bound inverted or empty");
  }
  if (identify.max_degree < 2) throw DomainError("config: identify.max_degree must be at least 2");
  if (identify.samples < 10) throw DomainError("config: identify.samples must be at least 10");
  for (double s : identify.sigma_grid) {
    if (!(s > 0.0)) throw DomainError("config: identify.sigma_grid entries must be positive");
  }
  if (gendata.budget < 1 || gendata.stride < 1 || gendata.control_points < 1 || !(gendata.horizon > 0.0)) {
    throw DomainError("config: invalid gendata settings");
  }
  for (int m : cfnn.m) {
    if (m < 0 && m != kFullParameterCount) throw DomainError("config: cfnn.m entries must be nonnegative");
  }
  if (cfnn.batch_size < 1 || cfnn.max_epochs < 1 || cfnn.patience < 1 || cfnn.restarts < 1 || !(cfnn.learning_rate > 0.0)) {
    throw DomainError("config: invalid cfnn settings");
  }
  if (bound.budget < 1 || bound.control_points < 1 || !(bound.horizon > 0.0) || !(bound.safety_factor >= 1.0)) {
    throw DomainError("config: invalid bound settings");
  }
  if (!(analysis.tolerance > 0.0) || analysis.grid < 2 || analysis.max_sweeps < 0 || !(analysis.margin >= 0.0)) {
    throw DomainError("config: invalid analysis settings");
  }
}

io::Json config_to_json(const PipelineConfig& c) {
  return Json{
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"tau", c.tau},
      {"system",
       {{"name", c.system.name},
        {"command", c.system.command},
        {"g_over_l", c.system.g_over_l},
        {"damping", c.system.damping},
        {"mu", c.system.mu},
        {"x_op", c.system.x_op},
        {"u_op", c.system.u_op}}},
      {"envelope", {{"lower", c.envelope_lower}, {"upper", c.envelope_upper}, {"labels", c.labels}}},
      {"identify",
       {{"max_degree", c.identify.max_degree},
        {"variable_caps", c.identify.variable_caps},
        {"equation_variables", c.identify.equation_variables},
        {"samples", c.identify.samples},
        {"sigma_grid", c.identify.sigma_grid}}},
      {"lpv", {{"priority", c.priority}}},
      {"controller", {{"q", c.lqr_q}, {"r", c.lqr_r}}},
      {"gendata",
       {{"budget", c.gendata.budget},
        {"min_spread", c.gendata.min_spread},
        {"target_samples", c.gendata.target_samples},
        {"stride", c.gendata.stride},
        {"horizon", c.gendata.horizon},
        {"control_points", c.gendata.control_points}}},
      {"cfnn",
       {{"m", m_to_json(c.cfnn.m)},
        {"hidden", c.cfnn.hidden},
        {"learning_rate", c.cfnn.learning_rate},
        {"batch_size", c.cfnn.batch_size},
        {"sigma_bar", c.cfnn.sigma_bar},
        {"patience", c.cfnn.patience},
        {"max_epochs", c.cfnn.max_epochs},
        {"restarts", c.cfnn.restarts}}},
      {"bound",
       {{"budget", c.bound.budget},
        {"horizon", c.bound.horizon},
        {"control_points", c.bound.control_points},
        {"amplitude", c.bound.amplitude},
        {"safety_factor", c.bound.safety_factor}}},
      {"analysis",
       {{"tolerance", c.analysis.tolerance},
        {"grid", c.analysis.grid},
        {"max_sweeps", c.analysis.max_sweeps},
        {"margin", c.analysis.margin}}}};
}

PipelineConfig config_from_json(const io::Json& j) {
  PipelineConfig c;
  c.identify.sigma_grid = default_sigma_grid();
  check_keys(j, "root", {"seed", "output_dir", "tau", "system", "envelope", "identify", "lpv", "controller",
                         "gendata", "cfnn", "bound", "analysis"});
  read(j, "seed", c.seed);
  read(j, "output_dir", c.output_dir);
  read(j, "tau", c.tau);
  if (j.contains("system")) {
    const auto& s = j.at("system");
    check_keys(s, "system", {"name", "command", "g_over_l", "damping", "mu", "x_op", "u_op"});
    read(s, "name", c.system.name);
    read(s, "command", c.system.command);
    read(s, "g_over_l", c.system.g_over_l);
    read(s, "damping", c.system.damping);
    read(s, "mu", c.system.mu);
    read(s, "x_op", c.system.x_op);
    read(s, "u_op", c.system.u_op);
  }
  if (j.contains("envelope")) {
    const auto& e = j.at("envelope");
    check_keys(e, "envelope", {"lower", "upper", "labels"});
    read(e, "lower", c.envelope_lower);
    read(e, "upper", c.envelope_upper);
    read(e, "labels", c.labels);
  }
  if (j.contains("identify")) {
    const auto& s = j.at("identify");
    check_keys(s, "identify", {"max_degree", "variable_caps", "equation_variables", "samples", "sigma_grid"});
    read(s, "max_degree", c.identify.max_degree);
    read(s, "variable_caps", c.identify.variable_caps);
    read(s, "equation_variables", c.identify.equation_variables);
    read(s, "samples", c.identify.samples);
    read(s, "sigma_grid", c.identify.sigma_grid);
  }
  if (j.contains("lpv")) {
    check_keys(j.at("lpv"), "lpv", {"priority"});
    read(j.at("lpv"), "priority", c.priority);
  }
  if (j.contains("controller")) {
    check_keys(j.at("controller"), "controller", {"q", "r"});
    read(j.at("controller"), "q", c.lqr_q);
    read(j.at("controller"), "r", c.lqr_r);
  }
  if (j.contains("gendata")) {
    const auto& s = j.at("gendata");
    check_keys(s, "gendata", {"budget", "min_spread", "target_samples", "stride", "horizon", "control_points"});
    read(s, "budget", c.gendata.budget);
    read(s, "min_spread", c.gendata.min_spread);
    read(s, "target_samples", c.gendata.target_samples);
    read(s, "stride", c.gendata.stride);
    read(s, "horizon", c.gendata.horizon);
    read(s, "control_points", c.gendata.control_points);
  }
  if (j.contains("cfnn")) {
    const auto& s = j.at("cfnn");
    check_keys(s, "cfnn", {"m", "hidden", "learning_rate", "batch_size", "sigma_bar", "patience", "max_epochs",
                                "restarts"});
    if (s.contains("m")) c.cfnn.m = m_from_json(s.at("m"));
    read(s, "hidden", c.cfnn.hidden);
    read(s, "learning_rate", c.cfnn.learning_rate);
    read(s, "batch_size", c.cfnn.batch_size);
    read(s, "sigma_bar", c.cfnn.sigma_bar);
    read(s, "patience", c.cfnn.patience);
    read(s, "max_epochs", c.cfnn.max_epochs);
    read(s, "restarts", c.cfnn.restarts);
  }
  if (j.contains("bound")) {
    const auto& s = j.at("bound");
    check_keys(s, "bound", {"budget", "horizon", "control_points", "amplitude", "safety_factor"});
    read(s, "budget", c.bound.budget);
    read(s, "horizon", c.bound.horizon);
    read(s, "control_points", c.bound.control_points);
    read(s, "amplitude", c.bound.amplitude);
    read(s, "safety_factor", c.bound.safety_factor);
  }
  if (j.contains("analysis")) {
    const auto& s = j.at("analysis");
    check_keys(s, "analysis", {"tolerance", "grid", "max_sweeps", "margin"});
    read(s, "tolerance", c.analysis.tolerance);
    read(s, "grid", c.analysis.grid);
    read(s, "max_sweeps", c.analysis.max_sweeps);
    read(s, "margin", c.analysis.margin);
  }
  c.validate();
  return c;
}

PipelineConfig parse_toml_config(const std::string& text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw DomainError(os.str());
  }
  std::ostringstream os;
  os << toml::json_formatter{table};
  return config_from_json(Json::parse(os.str()));
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  if (path.extension() == ".json") {
    Json j = Json::parse(text);
    if (j.contains("config") && j.at("config").is_object()) j = j.at("config");
    return config_from_json(j);
  }
  return parse_toml_config(text);
}

std::vector<int> parse_m_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    if (item == "l") {
      out.push_back(kFullParameterCount);
      continue;
    }
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 0) throw DomainError("--m: expected nonnegative integers or 'l', got '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw DomainError("--m: empty list");
  return out;
}

}  // namespace lftkit

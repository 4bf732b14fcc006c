#include "lftkit/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lftkit::io {

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double to_double(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw DomainError("expected a number, got \"" + s + "\"");
  }
  return j.get<double>();
}

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(number(m(i, k)));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DomainError("matrix: data length mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = to_double(data[static_cast<std::size_t>(i * cols + k)]);
  }
  return m;
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v[i]));
  return out;
}

Vector vector_from_json(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(j[i]);
  return v;
}

Json int_matrix_to_json(const IntMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

IntMatrix int_matrix_from_json(const Json& j) {
  // Column count is carried by the caller when the block is empty.
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  IntMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<int>();
  }
  return m;
}

Json to_json(const Hyperrectangle& box) {
  return Json{{"labels", box.labels}, {"lower", vector_to_json(box.lower)}, {"upper", vector_to_json(box.upper)}};
}

Hyperrectangle hyperrectangle_from_json(const Json& j) {
  return Hyperrectangle(vector_from_json(j.at("lower")), vector_from_json(j.at("upper")),
                        j.at("labels").get<std::vector<std::string>>());
}

namespace {

Json interval_json(const Interval& iv) { return Json::array({number(iv.lo), number(iv.hi)}); }
Interval interval_from(const Json& j) { return {to_double(j.at(0)), to_double(j.at(1))}; }

}  // namespace

Json to_json(const ParameterSet& set) {
  Json values = Json::array(), rates = Json::array();
  for (const auto& v : set.value_bounds) values.push_back(interval_json(v));
  for (const auto& r : set.rate_bounds) rates.push_back(interval_json(r));
  return Json{{"value_bounds", values}, {"rate_bounds", rates}};
}

ParameterSet parameter_set_from_json(const Json& j) {
  ParameterSet set;
  for (const auto& v : j.at("value_bounds")) set.value_bounds.push_back(interval_from(v));
  for (const auto& r : j.at("rate_bounds")) set.rate_bounds.push_back(interval_from(r));
  return set;
}

Json to_json(const DiscreteLinearModel& lin) {
  return Json{{"tau", lin.tau},
              {"x_op", vector_to_json(lin.x_op)},
              {"u_op", vector_to_json(lin.u_op)},
              {"A", matrix_to_json(lin.A)},
              {"B", matrix_to_json(lin.B)},
              {"C", matrix_to_json(lin.C)},
              {"D", matrix_to_json(lin.D)}};
}

DiscreteLinearModel linear_model_from_json(const Json& j) {
  DiscreteLinearModel lin;
  lin.tau = j.at("tau").get<double>();
  lin.x_op = vector_from_json(j.at("x_op"));
  lin.u_op = vector_from_json(j.at("u_op"));
  lin.A = matrix_from_json(j.at("A"));
  lin.B = matrix_from_json(j.at("B"));
  lin.C = matrix_from_json(j.at("C"));
  lin.D = matrix_from_json(j.at("D"));
  return lin;
}

Json to_json(const MonomialBasis& basis) {
  Json blocks = Json::array();
  for (const auto& b : basis.blocks) blocks.push_back(int_matrix_to_json(b));
  return Json{{"num_vars", basis.num_vars}, {"num_state_equations", basis.num_state_equations}, {"blocks", blocks}};
}

MonomialBasis basis_from_json(const Json& j) {
  MonomialBasis basis;
  basis.num_vars = j.at("num_vars").get<int>();
  basis.num_state_equations = j.at("num_state_equations").get<int>();
  for (const auto& b : j.at("blocks")) {
    IntMatrix m = int_matrix_from_json(b);
    if (m.rows() == 0) m.resize(0, basis.num_vars);
    if (m.cols() != basis.num_vars) throw DomainError("basis: exponent row length mismatch");
    basis.blocks.push_back(std::move(m));
  }
  return basis;
}

Json to_json(const PnlssModel& model) {
  Json coefficients = Json::array();
  for (const auto& c : model.coefficients) coefficients.push_back(vector_to_json(c));
  Json sigma = Json::array();
  for (double s : model.sigma) sigma.push_back(number(s));
  return Json{{"linear", to_json(model.linear)},
              {"envelope", to_json(model.envelope)},
              {"basis", to_json(model.basis)},
              {"coefficients", coefficients},
              {"sigma", sigma}};
}

PnlssModel pnlss_from_json(const Json& j) {
  std::vector<Vector> coefficients;
  for (const auto& c : j.at("coefficients")) coefficients.push_back(vector_from_json(c));
  std::vector<double> sigma;
  for (const auto& s : j.at("sigma")) sigma.push_back(to_double(s));
  return assemble_pnlss(linear_model_from_json(j.at("linear")), basis_from_json(j.at("basis")),
                        std::move(coefficients), hyperrectangle_from_json(j.at("envelope")), std::move(sigma));
}

Json to_json(const LpvModel& lpv) {
  Json terms = Json::array();
  for (const auto& t : lpv.terms) {
    Json e = Json::array();
    for (int i = 0; i < t.exponents.size(); ++i) e.push_back(t.exponents[i]);
    terms.push_back(Json{{"row", t.row}, {"col", t.col}, {"coefficient", number(t.coefficient)}, {"exponents", e}});
  }
  return Json{{"state_dim", lpv.state_dim},
              {"input_dim", lpv.input_dim},
              {"output_dim", lpv.output_dim},
              {"parameter_names", lpv.parameter_names},
              {"parameter_sources", lpv.parameter_sources},
              {"parameters", to_json(lpv.parameters)},
              {"base", matrix_to_json(lpv.base)},
              {"terms", terms}};
}

LpvModel lpv_from_json(const Json& j) {
  LpvModel lpv;
  lpv.state_dim = j.at("state_dim").get<int>();
  lpv.input_dim = j.at("input_dim").get<int>();
  lpv.output_dim = j.at("output_dim").get<int>();
  lpv.parameter_names = j.at("parameter_names").get<std::vector<std::string>>();
  lpv.parameter_sources = j.at("parameter_sources").get<std::vector<int>>();
  lpv.parameters = parameter_set_from_json(j.at("parameters"));
  lpv.base = matrix_from_json(j.at("base"));
  const int l = lpv.num_parameters();
  for (const auto& t : j.at("terms")) {
    LpvTerm term;
    term.row = t.at("row").get<int>();
    term.col = t.at("col").get<int>();
    term.coefficient = to_double(t.at("coefficient"));
    const auto e = t.at("exponents").get<std::vector<int>>();
    if (static_cast<int>(e.size()) != l) throw DomainError("lpv: exponent length mismatch");
    term.exponents = Eigen::Map<const Eigen::VectorXi>(e.data(), l);
    lpv.terms.push_back(std::move(term));
  }
  return lpv;
}

Json to_json(const LftSystem& lft) {
  Json blocks = Json::array();
  for (const auto& b : lft.blocks) {
    blocks.push_back(Json{{"name", b.name},
                          {"repetitions", b.repetitions},
                          {"value_bounds", interval_json(b.value_bounds)},
                          {"rate_bounds", interval_json(b.rate_bounds)}});
  }
  Json out{{"state_dim", lft.state_dim},
           {"input_dim", lft.input_dim},
           {"output_dim", lft.output_dim},
           {"phi_dim", lft.phi_dim()},
           {"theta_dim", lft.theta_dim()},
           {"blocks", blocks},
           {"dynamic", nullptr},
           {"G", matrix_to_json(lft.G)}};
  if (lft.dynamic) {
    out["dynamic"] = Json{{"bound", number(lft.dynamic->bound)},
                          {"input_dim", lft.dynamic->input_dim},
                          {"output_dim", lft.dynamic->output_dim}};
  }
  return out;
}

LftSystem lft_from_json(const Json& j) {
  LftSystem lft;
  lft.state_dim = j.at("state_dim").get<int>();
  lft.input_dim = j.at("input_dim").get<int>();
  lft.output_dim = j.at("output_dim").get<int>();
  for (const auto& b : j.at("blocks")) {
    lft.blocks.push_back({b.at("name").get<std::string>(), b.at("repetitions").get<int>(),
                          interval_from(b.at("value_bounds")), interval_from(b.at("rate_bounds"))});
  }
  if (!j.at("dynamic").is_null()) {
    const auto& d = j.at("dynamic");
    lft.dynamic = DynamicBlock{to_double(d.at("bound")), d.at("input_dim").get<int>(), d.at("output_dim").get<int>()};
  }
  lft.G = matrix_from_json(j.at("G"));
  lft.validate();
  return lft;
}

Json to_json(const Cfnn& net, const TrainHistory* history) {
  Json layers = Json::array();
  for (std::size_t k = 0; k < net.weights.size(); ++k) {
    const bool decoder = k + 1 == net.weights.size();
    layers.push_back(Json{{"activation", decoder ? "linear" : "tanh"},
                          {"weight", matrix_to_json(net.weights[k])},
                          {"bias", vector_to_json(net.biases[k])}});
  }
  Json out{{"seed", net.seed},
           {"num_parameters", net.num_parameters()},
           {"bottleneck", net.bottleneck()},
           {"selection", matrix_to_json(net.selection)},
           {"layers", layers},
           {"history", nullptr}};
  if (history) {
    Json train = Json::array(), validation = Json::array();
    for (double v : history->train_loss) train.push_back(number(v));
    for (double v : history->validation_loss) validation.push_back(number(v));
    out["history"] = Json{{"initial_train_loss", number(history->initial_train_loss)},
                          {"best_epoch", history->best_epoch},
                          {"best_validation_loss", number(history->best_validation_loss)},
                          {"train_loss", train},
                          {"validation_loss", validation}};
  }
  return out;
}

Cfnn cfnn_from_json(const Json& j) {
  Cfnn net;
  net.seed = j.at("seed").get<std::uint64_t>();
  net.selection = matrix_from_json(j.at("selection"));
  for (const auto& layer : j.at("layers")) {
    net.weights.push_back(matrix_from_json(layer.at("weight")));
    net.biases.push_back(vector_from_json(layer.at("bias")));
  }
  if (net.weights.size() < 2) throw DomainError("cfnn: need an encoder and a decoder layer");
  return net;
}

namespace {

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string pareto_csv(const std::vector<ParetoResult>& per_equation) {
  std::ostringstream os;
  os << "equation,sigma,fit_error,validation_error,l1_norm,support,selected\n";
  for (std::size_t k = 0; k < per_equation.size(); ++k) {
    const auto& res = per_equation[k];
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& r = res.rows[i];
      os << k + 1 << ',' << format_double(r.sigma) << ',' << format_double(r.fit_error) << ','
         << format_double(r.validation_error) << ',' << format_double(r.l1_norm) << ',' << r.support << ','
         << (static_cast<int>(i) == res.selected ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

std::string training_set_csv(const TrainingSet& data, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "run";
  for (Eigen::Index c = 0; c < data.samples.cols(); ++c) {
    os << ',' << (c < static_cast<Eigen::Index>(labels.size()) ? labels[static_cast<std::size_t>(c)]
                                                               : "w" + std::to_string(c + 1));
  }
  os << '\n';
  for (Eigen::Index i = 0; i < data.samples.rows(); ++i) {
    os << data.run_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < data.samples.cols(); ++c) os << ',' << format_double(data.samples(i, c));
    os << '\n';
  }
  return os.str();
}

TrainingSet training_set_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DomainError("training set: empty file");
  const auto columns = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
  std::vector<std::vector<double>> rows;
  TrainingSet data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::getline(fields, cell, ',');
    data.run_ids.push_back(std::stoi(cell));
    std::vector<double> row;
    while (std::getline(fields, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (static_cast<Eigen::Index>(row.size()) != columns) throw DomainError("training set: ragged row");
    rows.push_back(std::move(row));
  }
  data.samples.resize(static_cast<Eigen::Index>(rows.size()), columns);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index c = 0; c < columns; ++c) data.samples(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  }
  return data;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("required file not found: " + path.string(), path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
}

}  // namespace lftkit::io

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "lftkit/analysis.hpp"
#include "lftkit/cfnn.hpp"
#include "lftkit/dynamics.hpp"
#include "lftkit/envelope.hpp"
#include "lftkit/falsify.hpp"
#include "lftkit/lft_system.hpp"
#include "lftkit/lpvlft.hpp"
#include "lftkit/sysid.hpp"

namespace lftkit::io {

using Json = nlohmann::ordered_json;

/// Serialized text of a JSON document: two-space indent, trailing newline.
/// Non-finite numbers are written as the strings "inf", "-inf", "nan".
std::string dump(const Json& j);

Json number(double v);
double to_double(const Json& j);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);
Json int_matrix_to_json(const IntMatrix& m);
IntMatrix int_matrix_from_json(const Json& j);

Json to_json(const Hyperrectangle& box);
Hyperrectangle hyperrectangle_from_json(const Json& j);
Json to_json(const ParameterSet& set);
ParameterSet parameter_set_from_json(const Json& j);
Json to_json(const DiscreteLinearModel& lin);
DiscreteLinearModel linear_model_from_json(const Json& j);
Json to_json(const MonomialBasis& basis);
MonomialBasis basis_from_json(const Json& j);
Json to_json(const PnlssModel& model);
PnlssModel pnlss_from_json(const Json& j);
Json to_json(const LpvModel& lpv);
LpvModel lpv_from_json(const Json& j);
Json to_json(const LftSystem& lft);
LftSystem lft_from_json(const Json& j);
Json to_json(const Cfnn& net, const TrainHistory* history = nullptr);
Cfnn cfnn_from_json(const Json& j);

/// Pareto table of every equation: equation, sigma, errors, support, selected.
std::string pareto_csv(const std::vector<ParetoResult>& per_equation);

/// Training samples with run ids; header from the envelope labels.
std::string training_set_csv(const TrainingSet& data, const std::vector<std::string>& labels);
TrainingSet training_set_from_csv(const std::string& text);

/// Reads a whole file; throws DependencyError naming the file if missing.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);

}  // namespace lftkit::io

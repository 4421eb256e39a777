#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "bgc/dists.hpp"

// Model kinds, their parameter names, flat parameter vectors, and the
// "kind:name=value,..." text form used by the CLI and fit tables.

namespace bgc {

enum class ModelKind { rma, mbcb, exp_gamma, gamma_normal, exp_lognormal, gamma_lognormal, gbgb, gbnormal };

std::string kind_name(ModelKind k);
ModelKind parse_model_kind(std::string_view name);  // UsageError on unknown names
ModelKind kind_of(const ModelSpec& m);
const std::vector<ModelKind>& all_model_kinds();

const std::vector<std::string>& param_names(ModelKind k);
std::vector<double> param_values(const ModelSpec& m);
ModelSpec from_values(ModelKind k, const std::vector<double>& values);

// "rma:theta=0.01,mu=100,sigma=15"; every parameter must be given exactly once.
ModelSpec parse_model(std::string_view text);
std::string format_model(const ModelSpec& m);

// Shortest decimal that reads back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text);  // DataFormatError unless the whole field is a number

}  // namespace bgc

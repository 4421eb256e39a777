#include "bgc/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "bgc/error.hpp"

namespace bgc {

namespace {

struct KindInfo {
  ModelKind kind;
  const char* name;
  std::vector<std::string> params;
};

const std::vector<KindInfo>& kinds() {
  static const std::vector<KindInfo> k = {
      {ModelKind::rma, "rma", {"theta", "mu", "sigma"}},
      {ModelKind::mbcb, "mbcb", {"theta", "mu", "sigma"}},
      {ModelKind::exp_gamma, "exp-gamma", {"theta", "alpha", "beta"}},
      {ModelKind::gamma_normal, "gamma-normal", {"alpha", "beta", "mu", "sigma"}},
      {ModelKind::exp_lognormal, "exp-lognormal", {"theta", "mu", "sigma"}},
      {ModelKind::gamma_lognormal, "gamma-lognormal", {"alpha", "beta", "mu", "sigma"}},
      {ModelKind::gbgb, "gb-gb", {"a1", "c1", "d1", "u1", "v1", "a2", "c2", "d2", "u2", "v2"}},
      {ModelKind::gbnormal, "gb-normal", {"a", "c", "d", "u", "v", "mu", "sigma"}},
  };
  return k;
}

const KindInfo& info(ModelKind k) {
  for (const auto& i : kinds())
    if (i.kind == k) return i;
  throw UsageError("unknown model kind");
}

}  // namespace

std::string kind_name(ModelKind k) { return info(k).name; }

ModelKind parse_model_kind(std::string_view name) {
  for (const auto& i : kinds())
    if (name == i.name) return i.kind;
  std::string known;
  for (const auto& i : kinds()) known += (known.empty() ? "" : ", ") + std::string(i.name);
  throw UsageError("unknown model '" + std::string(name) + "' (known: " + known + ")");
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> all = [] {
    std::vector<ModelKind> v;
    for (const auto& i : kinds()) v.push_back(i.kind);
    return v;
  }();
  return all;
}

ModelKind kind_of(const ModelSpec& m) {
  return std::visit(
      [](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ExpNormal>)
          return x.bound == ExpNormalBound::observed ? ModelKind::rma : ModelKind::mbcb;
        else if constexpr (std::is_same_v<T, ExpGamma>)
          return ModelKind::exp_gamma;
        else if constexpr (std::is_same_v<T, GammaNormal>)
          return ModelKind::gamma_normal;
        else if constexpr (std::is_same_v<T, ExpLognormal>)
          return ModelKind::exp_lognormal;
        else if constexpr (std::is_same_v<T, GammaLognormal>)
          return ModelKind::gamma_lognormal;
        else if constexpr (std::is_same_v<T, GBGB>)
          return ModelKind::gbgb;
        else
          return ModelKind::gbnormal;
      },
      m);
}

const std::vector<std::string>& param_names(ModelKind k) { return info(k).params; }

std::vector<double> param_values(const ModelSpec& m) {
  return std::visit(
      [](const auto& x) -> std::vector<double> {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ExpNormal>)
          return {x.signal.theta, x.noise.mu, x.noise.sigma};
        else if constexpr (std::is_same_v<T, ExpGamma>)
          return {x.signal.theta, x.noise.alpha, x.noise.beta};
        else if constexpr (std::is_same_v<T, GammaNormal>)
          return {x.signal.alpha, x.signal.beta, x.noise.mu, x.noise.sigma};
        else if constexpr (std::is_same_v<T, ExpLognormal>)
          return {x.signal.theta, x.noise.mu, x.noise.sigma};
        else if constexpr (std::is_same_v<T, GammaLognormal>)
          return {x.signal.alpha, x.signal.beta, x.noise.mu, x.noise.sigma};
        else if constexpr (std::is_same_v<T, GBGB>)
          return {x.signal.a, x.signal.c, x.signal.d, x.signal.u, x.signal.v,
                  x.noise.a,  x.noise.c,  x.noise.d,  x.noise.u,  x.noise.v};
        else
          return {x.signal.a, x.signal.c, x.signal.d, x.signal.u, x.signal.v, x.noise.mu, x.noise.sigma};
      },
      m);
}

ModelSpec from_values(ModelKind k, const std::vector<double>& v) {
  if (v.size() != param_names(k).size())
    throw UsageError(kind_name(k) + " takes " + std::to_string(param_names(k).size()) + " parameters, got " +
                     std::to_string(v.size()));
  switch (k) {
    case ModelKind::rma: return ExpNormal{{v[0]}, {v[1], v[2]}, ExpNormalBound::observed};
    case ModelKind::mbcb: return ExpNormal{{v[0]}, {v[1], v[2]}, ExpNormalBound::unbounded};
    case ModelKind::exp_gamma: return ExpGamma{{v[0]}, {v[1], v[2]}};
    case ModelKind::gamma_normal: return GammaNormal{{v[0], v[1]}, {v[2], v[3]}};
    case ModelKind::exp_lognormal: return ExpLognormal{{v[0]}, {v[1], v[2]}};
    case ModelKind::gamma_lognormal: return GammaLognormal{{v[0], v[1]}, {v[2], v[3]}};
    case ModelKind::gbgb: return GBGB{{v[0], v[1], v[2], v[3], v[4]}, {v[5], v[6], v[7], v[8], v[9]}};
    case ModelKind::gbnormal: return GBNormal{{v[0], v[1], v[2], v[3], v[4]}, {v[5], v[6]}};
  }
  throw UsageError("unknown model kind");
}

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto r = std::from_chars(first, last, x);
  if (r.ec != std::errc() || r.ptr != last || first == last)
    throw DataFormatError("not a number: '" + std::string(text) + "'");
  return x;
}

ModelSpec parse_model(std::string_view text) {
  const auto colon = text.find(':');
  const ModelKind k = parse_model_kind(text.substr(0, colon));
  const auto& names = param_names(k);
  std::map<std::string, double> given;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw UsageError("model parameter '" + std::string(item) + "' lacks '='");
      const std::string key(item.substr(0, eq));
      if (std::find(names.begin(), names.end(), key) == names.end())
        throw UsageError("model " + kind_name(k) + " has no parameter '" + key + "'");
      if (given.count(key)) throw UsageError("parameter '" + key + "' given twice");
      try {
        given[key] = parse_double(item.substr(eq + 1));
      } catch (const DataFormatError& e) {
        throw UsageError(std::string("model parameter ") + key + ": " + e.what());
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  std::vector<double> values;
  for (const auto& n : names) {
    const auto it = given.find(n);
    if (it == given.end()) throw UsageError("model " + kind_name(k) + " is missing parameter '" + n + "'");
    values.push_back(it->second);
  }
  ModelSpec m = from_values(k, values);
  try {
    validate(m);
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
  return m;
}

std::string format_model(const ModelSpec& m) {
  const ModelKind k = kind_of(m);
  const auto& names = param_names(k);
  const auto values = param_values(m);
  std::string out = kind_name(k) + ":";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i] + "=" + format_double(values[i]);
  return out;
}

}  // namespace bgc

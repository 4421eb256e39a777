#include "bgc/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "bgc/error.hpp"
#include "bgc/model_io.hpp"

namespace bgc {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double real(const std::string& v) { return parse_double(v); }

long long integer(const std::string& v) {
  const double x = parse_double(v);
  if (x != std::floor(x) || std::abs(x) > 9e15) throw DataFormatError("not an integer: '" + v + "'");
  return static_cast<long long>(x);
}

bool boolean(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DataFormatError("not a boolean: '" + v + "'");
}

using Setter = std::function<void(Settings&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> s = {
      {"series.rel_tol", [](Settings& c, const std::string& v) { c.correct.series.rel_tol = real(v); }},
      {"series.max_terms", [](Settings& c, const std::string& v) { c.correct.series.max_terms_per_index = static_cast<int>(integer(v)); }},
      {"series.stable_window", [](Settings& c, const std::string& v) { c.correct.series.stable_window = static_cast<int>(integer(v)); }},
      {"series.max_condition", [](Settings& c, const std::string& v) { c.correct.series.max_condition = real(v); }},
      {"quad.rel_tol", [](Settings& c, const std::string& v) { c.correct.quad.rel_tol = real(v); }},
      {"quad.abs_tol", [](Settings& c, const std::string& v) { c.correct.quad.abs_tol = real(v); }},
      {"quad.max_subdivisions", [](Settings& c, const std::string& v) { c.correct.quad.max_subdivisions = static_cast<int>(integer(v)); }},
      {"fallback", [](Settings& c, const std::string& v) { c.correct.fallback = boolean(v); }},
      {"gamma_normal.backend",
       [](Settings& c, const std::string& v) {
         if (v == "quadrature")
           c.correct.gamma_normal = GammaNormalBackend::quadrature;
         else if (v == "grid")
           c.correct.gamma_normal = GammaNormalBackend::grid;
         else
           throw DataFormatError("expected quadrature or grid, got '" + v + "'");
       }},
      {"grid.points_per_sigma", [](Settings& c, const std::string& v) { c.correct.grid_points_per_sigma = real(v); }},
      {"optimizer.starts", [](Settings& c, const std::string& v) { c.fit.starts = static_cast<int>(integer(v)); }},
      {"optimizer.jitter", [](Settings& c, const std::string& v) { c.fit.jitter = real(v); }},
      {"optimizer.max_evaluations", [](Settings& c, const std::string& v) { c.fit.simplex.max_evaluations = static_cast<int>(integer(v)); }},
      {"optimizer.f_tol", [](Settings& c, const std::string& v) { c.fit.simplex.f_tol = real(v); }},
      {"optimizer.x_tol", [](Settings& c, const std::string& v) { c.fit.simplex.x_tol = real(v); }},
      {"optimizer.initial_step", [](Settings& c, const std::string& v) { c.fit.simplex.initial_step = real(v); }},
      {"optimizer.polish_iterations", [](Settings& c, const std::string& v) { c.fit.polish_iterations = static_cast<int>(integer(v)); }},
  };
  return s;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> default_settings() {
  const Settings d;
  const auto& c = d.correct;
  const auto& f = d.fit;
  return {
      {"series.rel_tol", format_double(c.series.rel_tol)},
      {"series.max_terms", std::to_string(c.series.max_terms_per_index)},
      {"series.stable_window", std::to_string(c.series.stable_window)},
      {"series.max_condition", format_double(c.series.max_condition)},
      {"quad.rel_tol", format_double(c.quad.rel_tol)},
      {"quad.abs_tol", format_double(c.quad.abs_tol)},
      {"quad.max_subdivisions", std::to_string(c.quad.max_subdivisions)},
      {"fallback", c.fallback ? "true" : "false"},
      {"gamma_normal.backend", c.gamma_normal == GammaNormalBackend::grid ? "grid" : "quadrature"},
      {"grid.points_per_sigma", format_double(c.grid_points_per_sigma)},
      {"optimizer.starts", std::to_string(f.starts)},
      {"optimizer.jitter", format_double(f.jitter)},
      {"optimizer.max_evaluations", std::to_string(f.simplex.max_evaluations)},
      {"optimizer.f_tol", format_double(f.simplex.f_tol)},
      {"optimizer.x_tol", format_double(f.simplex.x_tol)},
      {"optimizer.initial_step", format_double(f.simplex.initial_step)},
      {"optimizer.polish_iterations", std::to_string(f.polish_iterations)},
  };
}

Settings parse_settings(std::istream& in, const std::string& source) {
  Settings s;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(where + "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw UsageError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw UsageError(where + "key '" + key + "' set twice");
    try {
      it->second(s, value);
    } catch (const DataFormatError& e) {
      throw UsageError(where + key + ": " + e.what());
    }
  }
  try {
    s.correct.validate();
    s.fit.simplex.validate();
    if (s.fit.starts < 1) throw InvalidParameter("optimizer.starts must be at least 1");
    if (s.fit.polish_iterations < 0) throw InvalidParameter("optimizer.polish_iterations must be non-negative");
    if (!(s.fit.jitter >= 0.0)) throw InvalidParameter("optimizer.jitter must be non-negative");
  } catch (const InvalidParameter& e) {
    throw UsageError(source + ": " + e.what());
  }
  return s;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  return parse_settings(in, path);
}

Settings resolve_settings(const std::optional<std::string>& explicit_path) {
  if (explicit_path) return load_settings(*explicit_path);
  if (const char* env = std::getenv(kConfigEnv); env && *env) return load_settings(env);
  return Settings{};
}

}  // namespace bgc

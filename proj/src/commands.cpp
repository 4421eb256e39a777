#include "bgc/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bgc/error.hpp"
#include "bgc/model_io.hpp"
#include "bgc/simulate.hpp"
#include "bgc/validate.hpp"

namespace bgc {

namespace {

// "-" is standard output.
template <class Write>
void emit(const std::string& path, Write&& write) {
  if (path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataFormatError("cannot write " + path);
  write(f);
  if (!f) throw DataFormatError("write failed: " + path);
}

std::string clean(std::string s) {
  for (char& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return s;
}

// Runs body(i) for every array. Arrays go to a worker pool when there are
// enough of them; otherwise the threads go to the per-gene loops inside.
template <class Body>
void for_each_array(std::size_t n, int threads, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const long long nn = static_cast<long long>(n);
  if (n >= static_cast<std::size_t>(threads)) {
    omp_set_num_threads(1);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long i = 0; i < nn; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    omp_set_num_threads(threads);
    for (long long i = 0; i < nn; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  omp_set_num_threads(threads);
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

EstimationProblem problem_for(const ArrayDataset& d, std::size_t a, ModelKind kind, const CorrectConfig& cfg) {
  EstimationProblem pr;
  pr.observed = d.observed.values[a];
  pr.negatives = d.negatives.values[a];
  pr.kind = kind;
  pr.cfg = cfg;
  return pr;
}

std::map<std::string, ModelSpec> resolve_models(const std::string& params, const ArrayDataset& d) {
  std::map<std::string, ModelSpec> models;
  if (params.find(':') != std::string::npos && !std::filesystem::exists(params)) {
    const ModelSpec m = parse_model(params);
    for (const auto& a : d.observed.columns) models[a] = m;
    return models;
  }
  std::ifstream in(params);
  if (!in) throw UsageError("--params: '" + params + "' is neither a model string nor a readable fit table");
  return read_fit_table(in, params);
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UnsupportedMethod*>(&e)) return kExitUnsupported;
  if (dynamic_cast<const UsageError*>(&e)) return kExitUsage;
  if (dynamic_cast<const DataFormatError*>(&e)) return kExitData;
  return kExitNumeric;
}

int effective_threads(int requested) {
  if (requested < 0) throw UsageError("--threads must be non-negative");
  return requested == 0 ? omp_get_num_procs() : requested;
}

std::vector<FitRow> fit_arrays(const ArrayDataset& d, ModelKind kind, FitMethod method, const Settings& s,
                               std::uint64_t seed, int threads) {
  std::vector<FitRow> rows(d.arrays());
  for_each_array(d.arrays(), threads, [&](std::size_t a) {
    FitOptions opt = s.fit;
    opt.seed = seed + a;
    rows[a].array = d.observed.columns[a];
    rows[a].result = fit(problem_for(d, a, kind, s.correct), method, opt);
  });
  return rows;
}

void write_fit_table(std::ostream& out, ModelKind kind, const std::vector<FitRow>& rows) {
  out << "array\tmodel\tmethod";
  for (const auto& n : param_names(kind)) out << '\t' << n;
  out << "\tloglik\tconverged\titerations\n";
  for (const auto& r : rows) {
    out << r.array << '\t' << kind_name(kind) << '\t' << method_name(r.result.method);
    for (double v : param_values(r.result.params)) out << '\t' << format_double(v);
    out << '\t' << format_double(r.result.loglik) << '\t' << (r.result.converged ? "yes" : "no") << '\t'
        << r.result.iterations << '\n';
  }
}

std::map<std::string, ModelSpec> read_fit_table(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataFormatError(source + ": empty fit table");
  const auto head = split_tabs(line);
  if (head.size() < 4 || head[0] != "array" || head[1] != "model")
    throw HeaderMismatch(source + ": fit table header must start with array, model");
  std::map<std::string, ModelSpec> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != head.size()) throw MalformedRow(source, lineno, "field count differs from the header");
    ModelKind kind;
    try {
      kind = parse_model_kind(f[1]);
    } catch (const UsageError& e) {
      throw MalformedRow(source, lineno, e.what());
    }
    const auto& names = param_names(kind);
    if (head.size() < 3 + names.size()) throw HeaderMismatch(source + ": too few parameter columns");
    std::vector<double> values;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (head[3 + i] != names[i])
        throw HeaderMismatch(source + ": expected parameter column " + names[i] + ", found " + head[3 + i]);
      try {
        values.push_back(parse_double(f[3 + i]));
      } catch (const DataFormatError&) {
        throw MalformedRow(source, lineno, names[i] + ": not a number");
      }
    }
    ModelSpec m = from_values(kind, values);
    try {
      validate(m);
    } catch (const InvalidParameter& e) {
      throw MalformedRow(source, lineno, e.what());
    }
    if (!out.emplace(f[0], m).second) throw MalformedRow(source, lineno, "array " + f[0] + " listed twice");
  }
  return out;
}

CorrectedArrays correct_arrays(const ArrayDataset& d, const std::map<std::string, ModelSpec>& models,
                               const CorrectConfig& cfg, int threads) {
  for (const auto& a : d.observed.columns)
    if (!models.count(a)) throw DataFormatError("no parameters for array " + a);
  CorrectedArrays c;
  c.corrected.columns = d.observed.columns;
  c.corrected.ids = d.observed.ids;
  c.corrected.values.resize(d.arrays());
  c.details.resize(d.arrays());
  for_each_array(d.arrays(), threads, [&](std::size_t a) {
    c.details[a] = correct_array(d.observed.values[a], models.at(d.observed.columns[a]), cfg);
    c.corrected.values[a] = c.details[a].values;
  });
  for (const auto& x : c.details) c.failed += x.failed;
  return c;
}

void write_diagnostics(std::ostream& out, const CorrectedArrays& c) {
  out << "ProbeID\tarray\tpath\tfallback\terror\n";
  for (std::size_t a = 0; a < c.details.size(); ++a) {
    const auto& x = c.details[a];
    for (std::size_t i = 0; i < x.values.size(); ++i) {
      const bool failed = !x.errors[i].empty();
      const bool fallback = x.fell_back[i] != 0;
      out << c.corrected.ids[i] << '\t' << c.corrected.columns[a] << '\t' << (failed ? "failed" : path_name(x.paths[i]))
          << '\t' << (fallback ? 1 : 0) << '\t' << clean(x.errors[i]) << '\n';
    }
  }
}

int cmd_fit(const std::string& observed, const std::string& negatives, const std::string& model,
            const std::string& method, const std::string& out, const RunOptions& opt) {
  const ModelKind kind = parse_model_kind(model);
  const FitMethod fm = parse_fit_method(method);
  const Settings s = resolve_settings(opt.config);
  const int threads = effective_threads(opt.threads);
  const ArrayDataset d = ingest(observed, negatives);
  const auto rows = fit_arrays(d, kind, fm, s, opt.seed, threads);
  emit(out, [&](std::ostream& o) { write_fit_table(o, kind, rows); });
  for (const auto& r : rows)
    if (!r.result.converged) {
      std::cerr << "bgc fit: array " << r.array << " did not converge";
      for (const auto& m : r.result.diagnostics) std::cerr << "; " << m;
      std::cerr << '\n';
    }
  for (const auto& r : rows)
    if (!r.result.converged) return kExitPartial;
  return kExitOk;
}

int cmd_correct(const std::string& observed, const std::string& negatives, const std::string& params,
                const std::string& out, const std::string& diagnostics, const RunOptions& opt) {
  const Settings s = resolve_settings(opt.config);
  const int threads = effective_threads(opt.threads);
  const ArrayDataset d = ingest(observed, negatives);
  const auto models = resolve_models(params, d);
  const auto c = correct_arrays(d, models, s.correct, threads);
  emit(out, [&](std::ostream& o) { write_table(o, c.corrected); });
  if (!diagnostics.empty()) emit(diagnostics, [&](std::ostream& o) { write_diagnostics(o, c); });
  if (c.failed) {
    std::cerr << "bgc correct: " << c.failed << " genes could not be corrected (NaN in the output)\n";
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_simulate(const std::string& model, std::size_t genes, std::size_t controls, std::size_t arrays,
                 const std::string& out_dir, const RunOptions& opt) {
  const ModelSpec m = parse_model(model);
  const Settings s = resolve_settings(opt.config);
  const int threads = effective_threads(opt.threads);
  if (genes < 1 || controls < 2 || arrays < 1)
    throw UsageError("simulate needs at least 1 gene, 2 controls and 1 array");
  std::filesystem::create_directories(out_dir);
  std::vector<SimDataset> sims(arrays);
  std::vector<std::vector<NamedReport>> reports(arrays);
  for_each_array(arrays, threads, [&](std::size_t a) {
    sims[a] = simulate_experiment(m, genes, controls, opt.seed + a);
    reports[a] = compare_correctors(sims[a], s.correct);
  });
  Table obs, neg, truth;
  auto id = [](char prefix, std::size_t i, std::size_t n) {
    const std::string num = std::to_string(i + 1);
    return prefix + std::string(std::to_string(n).size() - num.size(), '0') + num;
  };
  for (std::size_t i = 0; i < genes; ++i) obs.ids.push_back(id('P', i, genes));
  for (std::size_t i = 0; i < controls; ++i) neg.ids.push_back(id('N', i, controls));
  truth.ids = obs.ids;
  std::vector<NamedReport> all;
  for (std::size_t a = 0; a < arrays; ++a) {
    const std::string name = "A" + std::to_string(a + 1);
    obs.columns.push_back(name);
    neg.columns.push_back(name);
    truth.columns.push_back(name);
    obs.values.push_back(sims[a].observed);
    neg.values.push_back(sims[a].negatives);
    truth.values.push_back(sims[a].true_signal);
    for (auto r : reports[a]) {
      if (arrays > 1) r.method = name + "/" + r.method;
      all.push_back(r);
    }
  }
  const std::filesystem::path dir(out_dir);
  write_table_file((dir / "observed.tsv").string(), obs);
  write_table_file((dir / "negatives.tsv").string(), neg);
  write_table_file((dir / "truth.tsv").string(), truth);
  emit((dir / "report.tsv").string(), [&](std::ostream& o) { write_mse_report(o, all); });
  return kExitOk;
}

int cmd_validate(const std::string& model, int draws, const std::string& out, const RunOptions& opt) {
  const ModelKind kind = parse_model_kind(model);
  const Settings s = resolve_settings(opt.config);
  const auto rows = run_validation(kind, draws, opt.seed, s.correct);
  emit(out, [&](std::ostream& o) { write_validation(o, rows); });
  std::size_t bad = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    if (!r.ok) ++bad;
    if (std::isfinite(r.rel_error)) worst = std::max(worst, r.rel_error);
  }
  std::cerr << "bgc validate: " << kind_name(kind) << ", " << rows.size() << " draws, max rel error "
            << format_double(worst) << ", " << bad << " outside tolerance " << format_double(validation_tolerance(kind))
            << '\n';
  return bad ? kExitNumeric : kExitOk;
}

int cmd_benchmark(const std::string& truth, const std::string& corrected, const std::string& label,
                  const std::string& out) {
  const Table t = read_table_file(truth);
  const Table c = read_table_file(corrected, false);
  if (t.columns != c.columns) throw HeaderMismatch("array columns differ between " + truth + " and " + corrected);
  if (t.ids != c.ids) throw DataFormatError("probe ids differ between " + truth + " and " + corrected);
  std::vector<NamedReport> all;
  for (std::size_t a = 0; a < t.columns.size(); ++a) {
    SimDataset d;
    d.true_signal = t.values[a];
    const std::string name = t.columns.size() > 1 ? t.columns[a] + "/" + label : label;
    all.push_back({name, benchmark_mse(d, c.values[a])});
  }
  emit(out, [&](std::ostream& o) { write_mse_report(o, all); });
  return kExitOk;
}

}  // namespace bgc

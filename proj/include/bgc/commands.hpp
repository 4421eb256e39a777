#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bgc/config.hpp"
#include "bgc/estimate.hpp"
#include "bgc/tsv.hpp"

// The fit / correct / simulate / validate / benchmark commands. Each returns
// its exit status; failures it cannot report in its output are thrown.

namespace bgc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitUnsupported = 3;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitData = 65;
inline constexpr int kExitNumeric = 70;

// Exit status for an exception escaping a command.
int exit_code_for(const std::exception& e);

struct RunOptions {
  std::optional<std::string> config;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: one per processor
};

int effective_threads(int requested);

struct FitRow {
  std::string array;
  FitResult result;
};

// One fit per array, in dataset order.
std::vector<FitRow> fit_arrays(const ArrayDataset& d, ModelKind kind, FitMethod method, const Settings& s,
                               std::uint64_t seed, int threads);

// Columns: array, model, method, <parameters>, loglik, converged, iterations.
void write_fit_table(std::ostream& out, ModelKind kind, const std::vector<FitRow>& rows);
std::map<std::string, ModelSpec> read_fit_table(std::istream& in, const std::string& source);

struct CorrectedArrays {
  Table corrected;
  std::vector<ArrayCorrection> details;  // per array
  std::size_t failed = 0;
};

CorrectedArrays correct_arrays(const ArrayDataset& d, const std::map<std::string, ModelSpec>& models,
                               const CorrectConfig& cfg, int threads);

// Columns: ProbeID, array, path, fallback, error.
void write_diagnostics(std::ostream& out, const CorrectedArrays& c);

int cmd_fit(const std::string& observed, const std::string& negatives, const std::string& model, const std::string& method,
            const std::string& out, const RunOptions& opt);

// params: a fit table path, or an inline model string applied to every array.
int cmd_correct(const std::string& observed, const std::string& negatives, const std::string& params,
                const std::string& out, const std::string& diagnostics, const RunOptions& opt);

// Writes observed.tsv, negatives.tsv, truth.tsv and report.tsv into out_dir.
int cmd_simulate(const std::string& model, std::size_t genes, std::size_t controls, std::size_t arrays,
                 const std::string& out_dir, const RunOptions& opt);

int cmd_validate(const std::string& model, int draws, const std::string& out, const RunOptions& opt);

// MSE report of a corrected table against the truth table written by simulate.
int cmd_benchmark(const std::string& truth, const std::string& corrected, const std::string& label,
                  const std::string& out);

}  // namespace bgc

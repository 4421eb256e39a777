#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgc/correct.hpp"
#include "bgc/dists.hpp"
#include "bgc/model_io.hpp"
#include "bgc/optimize.hpp"

// Per-array parameter estimation from regular genes and negative controls.

namespace bgc {

struct EstimationProblem {
  std::vector<double> observed;   // regular genes P_i
  std::vector<double> negatives;  // negative controls B_0w
  ModelKind kind = ModelKind::rma;
  CorrectConfig cfg;

  // All intensities positive and finite; at least one regular gene.
  void validate() const;
};

enum class FitMethod { mle, moments, plugin };

std::string method_name(FitMethod m);
FitMethod parse_fit_method(const std::string& name);  // UsageError on unknown names

struct FitOptions {
  int starts = 5;
  double jitter = 0.3;  // sd of start perturbations in the transformed space
  std::uint64_t seed = 1;
  NelderMeadConfig simplex;
  // Quasi-Newton steps on the analytic score after the simplex (GB families only).
  int polish_iterations = 30;
};

struct FitResult {
  ModelSpec params;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  FitMethod method = FitMethod::mle;
  double gradient_norm = 0.0;     // NaN where no analytic score exists
  double profile_flatness = 0.0;  // largest relative spread among near-optimal simplex vertices
  std::vector<std::string> diagnostics;
};

// Noise from negative-control moments, signal by moment matching on the
// floored differences observed - mean(negatives). GB families start at the
// gamma special case.
ModelSpec init_params(const EstimationProblem& problem);

// sum_i ln f_P(p_i) + sum_w ln f_B(b_0w). -inf when some observation lies
// outside the model's support or its density underflows.
double loglik(const ModelSpec& m, const EstimationProblem& problem);
double loglik_serial(const ModelSpec& m, const EstimationProblem& problem);

FitResult fit_mle(const EstimationProblem& problem, const FitOptions& opt = {});
FitResult fit_moments(const EstimationProblem& problem);
FitResult fit_plugin(const EstimationProblem& problem);
FitResult fit(const EstimationProblem& problem, FitMethod method, const FitOptions& opt = {});

// Analytic score in param_values order; empty for families without one.
std::vector<double> score_in_param_order(const ModelSpec& m, const EstimationProblem& problem);

// Search-space bounds for GB parameters.
inline constexpr double kMaxGBShape = 50.0;
inline constexpr double kMaxGBV = 1e4;

}  // namespace bgc

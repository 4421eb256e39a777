#pragma once

#include <span>
#include <string>
#include <vector>

#include "bgc/dists.hpp"
#include "bgc/quadrature.hpp"
#include "bgc/series.hpp"

// Corrected background intensity E[S | P = p] for every model, plus the
// per-gene log marginal density used by the likelihood.

namespace bgc {

// Which evaluation produced a value.
enum class CorrectionPath { closed_form, series, quadrature, grid };

std::string path_name(CorrectionPath p);

struct Correction {
  double value = 0.0;
  CorrectionPath path = CorrectionPath::closed_form;
};

enum class GammaNormalBackend { quadrature, grid };

struct CorrectConfig {
  SeriesConfig series;
  QuadConfig quad;
  // Evaluate by quadrature when a series is outside its region or fails to converge.
  bool fallback = true;
  GammaNormalBackend gamma_normal = GammaNormalBackend::quadrature;
  double grid_points_per_sigma = 100.0;

  void validate() const;
};

// p - mu - sigma^2 theta, the location of the exp-normal posterior before truncation.
double exp_normal_mu_sp(double p, const ExpParams& e, const NormalParams& b);

double correct_rma(double p, const ExpParams& e, const NormalParams& b);
double correct_mbcb(double p, const ExpParams& e, const NormalParams& b);
double correct_exp_gamma(double p, const ExpParams& e, const GammaParams& g);
double correct_gamma_normal(double p, const GammaParams& g, const NormalParams& b, const QuadConfig& q = {});

Correction correct_exp_lognormal(double p, const ExpParams& e, const LognormalParams& l, const CorrectConfig& cfg = {});
Correction correct_gamma_lognormal(double p, const GammaParams& g, const LognormalParams& l,
                                   const CorrectConfig& cfg = {});
Correction correct_gb(double p, const GBParams& s, const GBParams& b, const CorrectConfig& cfg = {});
Correction correct_gb_normal(double p, const GBParams& s, const NormalParams& b, const CorrectConfig& cfg = {});

// Dispatch on the model.
Correction correct(double p, const ModelSpec& m, const CorrectConfig& cfg = {});

// ln f_P(p) under the model, by the same path the corrector would take.
Correction log_marginal(double p, const ModelSpec& m, const CorrectConfig& cfg = {});

struct ArrayCorrection {
  std::vector<double> values;  // NaN where the gene failed
  std::vector<CorrectionPath> paths;
  std::vector<std::string> errors;  // empty when the gene succeeded
  std::vector<char> fell_back;      // 1 where quadrature replaced an available series
  std::size_t failed = 0;
  std::size_t fallbacks = 0;  // genes evaluated by quadrature although a series exists
};

// Per-gene errors are recorded, never thrown. Genes run in parallel; the
// serial variant is the reference implementation.
ArrayCorrection correct_array(std::span<const double> observed, const ModelSpec& m, const CorrectConfig& cfg = {});
ArrayCorrection correct_array_serial(std::span<const double> observed, const ModelSpec& m,
                                     const CorrectConfig& cfg = {});

// ln int_0^p b^(alpha-1) e^(-lambda b) db for any real lambda.
double log_gamma_partial_integral(double alpha, double lambda, double p);

}  // namespace bgc

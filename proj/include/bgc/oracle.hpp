#pragma once

#include "bgc/dists.hpp"
#include "bgc/quadrature.hpp"

// Adaptive-quadrature referee for the convolution marginal and the posterior
// mean. Depends only on the densities, never on the series code.
// Tolerances apply to the integrand rescaled to unit peak.

namespace bgc {

struct ConvolutionIntegral {
  double log_marginal = 0.0;  // ln f_P(p); -inf when p is unreachable or the integrand underflows
  double posterior_mean = 0.0;
  double rel_error = 0.0;
  int subdivisions = 0;
};

// Integration range (lo, hi) for s given p; empty when hi <= lo.
struct SignalRange {
  double lo = 0.0;
  double hi = 0.0;
};
SignalRange signal_range(double p, const ModelSpec& m);

ConvolutionIntegral integrate_convolution(double p, const ModelSpec& m, const QuadConfig& q = {});

double marginal_pdf_quadrature(double p, const ModelSpec& m, const QuadConfig& q = {});
double log_marginal_pdf_quadrature(double p, const ModelSpec& m, const QuadConfig& q = {});
double posterior_mean_quadrature(double p, const ModelSpec& m, const QuadConfig& q = {});

}  // namespace bgc

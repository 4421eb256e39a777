#pragma once

#include <vector>

#include "bgc/dists.hpp"
#include "bgc/estimate.hpp"

// Analytic gradients of the GB log-likelihoods.

namespace bgc {

// Order: a2, c2, d2, u2, v2 (noise), a1, c1, d1, u1, v1 (signal).
std::vector<double> score_gb(const GBGB& m, const EstimationProblem& problem);

// Order: mu, sigma, a, c, d, u, v.
std::vector<double> score_gb_normal(const GBNormal& m, const EstimationProblem& problem);

// Genes whose series is unavailable contribute central differences of the
// quadrature log marginal instead. The count of such genes from the last
// call on this thread is reported here.
std::size_t last_score_fallbacks();

}  // namespace bgc

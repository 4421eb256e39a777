#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "bgc/dists.hpp"

// Random parameter draws inside the regions where the series expansions
// converge, shared by the unit and acceptance tests.

namespace bgc::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

inline GBParams random_gb(std::mt19937_64& rng, double d_lo, double d_hi) {
  return GBParams{uniform(rng, 0.7, 2.5), uniform(rng, 0.1, 0.9), uniform(rng, d_lo, d_hi), uniform(rng, 1.0, 4.0),
                  uniform(rng, 1.2, 5.0)};
}

// Largest x with both expansion ratios (1-c)(x/d)^a and c(x/d)^a at most rho.
inline double gb_radius(const GBParams& g, double rho) {
  return g.d * std::pow(rho / std::max(g.c, 1.0 - g.c), 1.0 / g.a);
}

struct GBGBDraw {
  GBGB model;
  double p;
};

inline GBGBDraw draw_gbgb(std::mt19937_64& rng) {
  GBGBDraw out;
  out.model.signal = random_gb(rng, 1.0, 3.0);
  out.model.noise = random_gb(rng, 1.0, 3.0);
  const double p_max = std::min(gb_radius(out.model.signal, 0.6), gb_radius(out.model.noise, 0.6));
  out.p = uniform(rng, 0.2, 1.0) * p_max;
  return out;
}

struct GBNormalDraw {
  GBNormal model;
  double p;
};

// p - mu sits 7.5 to 13 noise sd above zero and mu / (p - mu) stays at or below 0.7.
inline GBNormalDraw draw_gbnormal(std::mt19937_64& rng) {
  GBNormalDraw out;
  out.model.signal = random_gb(rng, 20.0, 60.0);
  out.p = uniform(rng, 0.5, 1.0) * gb_radius(out.model.signal, 0.6);
  const double r = uniform(rng, 0.2, 0.7);
  const double pm = out.p / (1.0 + r);
  out.model.noise.mu = out.p - pm;
  out.model.noise.sigma = pm / uniform(rng, 7.5, 13.0);
  return out;
}

}  // namespace bgc::testing

#pragma once

#include <span>
#include <vector>

#include "bgc/dists.hpp"

// Gamma-normal posterior means for many observations at once by discrete
// convolution on a uniform grid (FFT). The signal is discretised into exact
// cell masses, so shapes below one are handled.

namespace bgc {

struct GridConfig {
  double points_per_sigma = 100.0;
  double tail = 1e-15;  // gamma mass dropped beyond the grid
  std::size_t max_points = std::size_t{1} << 24;
  // false: genes off the grid or below its resolution get NaN and are listed
  // in GridResult::unresolved instead of failing the whole batch
  bool throw_on_unresolved = true;

  void validate() const;
};

struct GridResult {
  std::vector<double> posterior_mean;
  std::vector<double> log_marginal;
  std::vector<std::size_t> unresolved;
};

// Throws NumericError when the grid would exceed max_points, and when the
// marginal underflows at some p unless throw_on_unresolved is off.
GridResult gamma_normal_grid(std::span<const double> ps, const GammaParams& g, const NormalParams& b,
                             const GridConfig& cfg = {});

}  // namespace bgc

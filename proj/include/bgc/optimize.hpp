#pragma once

#include <functional>
#include <vector>

// Derivative-free Nelder-Mead minimisation. Non-finite objective values are
// treated as +inf, so infeasible points simply repel the simplex.

namespace bgc {

struct NelderMeadConfig {
  int max_evaluations = 3000;
  double f_tol = 1e-10;  // relative spread of simplex values
  double x_tol = 1e-8;   // simplex diameter, relative to 1 + |x|
  double initial_step = 0.25;

  void validate() const;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::vector<double>> simplex;  // final vertices, best first
  std::vector<double> simplex_f;
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadConfig& cfg = {});

}  // namespace bgc

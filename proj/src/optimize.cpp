#include "bgc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bgc/error.hpp"

namespace bgc {

void NelderMeadConfig::validate() const {
  if (max_evaluations < 1) throw InvalidParameter("nelder_mead: max_evaluations must be positive");
  if (!(f_tol > 0.0) || !(x_tol > 0.0)) throw InvalidParameter("nelder_mead: tolerances must be positive");
  if (!(initial_step > 0.0)) throw InvalidParameter("nelder_mead: initial_step must be positive");
}

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadConfig& cfg) {
  cfg.validate();
  const std::size_t n = x0.size();
  if (n == 0) throw InvalidParameter("nelder_mead: empty parameter vector");
  NelderMeadResult out;
  auto eval = [&](const std::vector<double>& x) {
    ++out.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> pts(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += cfg.initial_step * std::max(1.0, std::abs(x0[i]));
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);
  if (!std::isfinite(fv[0])) throw NumericError("nelder_mead: objective is not finite at the starting point");

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> f2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = pts[order[i]];
      f2[i] = fv[order[i]];
    }
    pts.swap(p2);
    fv.swap(f2);
  };
  auto along = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = c[i] + t * (w[i] - c[i]);
    return x;
  };

  sort_simplex();
  while (out.evaluations < cfg.max_evaluations) {
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        diameter = std::max(diameter, std::abs(pts[i][k] - pts[0][k]) / (1.0 + std::abs(pts[0][k])));
    const double spread = fv[n] - fv[0];
    if (spread <= cfg.f_tol * (1.0 + std::abs(fv[0])) && diameter <= cfg.x_tol) {
      out.converged = true;
      break;
    }
    ++out.iterations;
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) c[k] += pts[i][k] / static_cast<double>(n);

    const auto xr = along(c, pts[n], -1.0);
    const double fr = eval(xr);
    if (fr < fv[0]) {
      const auto xe = along(c, pts[n], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        fv[n] = fe;
      } else {
        pts[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      pts[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      const auto xc = along(c, outside ? xr : pts[n], 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[n])) {
        pts[n] = xc;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          pts[i] = along(pts[0], pts[i], 0.5);
          fv[i] = eval(pts[i]);
        }
      }
    }
    sort_simplex();
  }
  out.x = pts[0];
  out.f = fv[0];
  out.simplex = pts;
  out.simplex_f = fv;
  return out;
}

}  // namespace bgc

#include "bgc/gamma_normal_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <mutex>
#include <string>

#include "bgc/error.hpp"
#include "bgc/specfun.hpp"

namespace bgc {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuf = std::unique_ptr<double[], FftwFree>;
using ComplexBuf = std::unique_ptr<fftw_complex[], FftwFree>;

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

// Mass of Gamma(shape, scale) on [lo, hi], taken from whichever tail keeps precision.
double gamma_mass(double shape, double scale, double lo, double hi) {
  const double a = std::max(lo, 0.0) / scale, b = hi / scale;
  if (b <= a) return 0.0;
  if (a >= shape) return boost::math::gamma_q(shape, a) - boost::math::gamma_q(shape, b);
  return boost::math::gamma_p(shape, b) - (a > 0.0 ? boost::math::gamma_p(shape, a) : 0.0);
}

}  // namespace

void GridConfig::validate() const {
  if (!(points_per_sigma >= 4.0)) throw InvalidParameter("gamma_normal_grid: points_per_sigma must be at least 4");
  if (!(tail > 0.0 && tail < 1e-3)) throw InvalidParameter("gamma_normal_grid: tail must lie in (0, 1e-3)");
  if (max_points < 64) throw InvalidParameter("gamma_normal_grid: max_points must be at least 64");
}

GridResult gamma_normal_grid(std::span<const double> ps, const GammaParams& g, const NormalParams& b,
                             const GridConfig& cfg) {
  g.validate();
  b.validate();
  cfg.validate();
  GridResult out;
  if (ps.empty()) return out;

  const double h = b.sigma / cfg.points_per_sigma;
  const double s_top = boost::math::gamma_q_inv(g.alpha, cfg.tail) * g.beta;
  const double reach = 38.0 * b.sigma;  // normal kernel is below 1e-300 beyond this
  const double ns_real = std::ceil(s_top / h) + 1.0;
  const double nb_real = 2.0 * std::ceil(reach / h) + 1.0;
  if (ns_real + nb_real > static_cast<double>(cfg.max_points))
    throw NumericError("gamma_normal_grid: grid would need " + std::to_string(ns_real + nb_real) +
                       " points; sigma is too small relative to the signal scale");
  const std::size_t ns = static_cast<std::size_t>(ns_real);
  const std::size_t nb = static_cast<std::size_t>(nb_real);
  std::size_t n = 64;
  while (n < ns + nb - 1) n *= 2;
  const std::size_t nc = n / 2 + 1;

  // Signal cells [i h, (i+1) h] at their midpoints; kernel nodes j h - reach.
  RealBuf den(fftw_alloc_real(n)), num(fftw_alloc_real(n)), ker(fftw_alloc_real(n));
  ComplexBuf fden(fftw_alloc_complex(nc)), fnum(fftw_alloc_complex(nc)), fker(fftw_alloc_complex(nc));
  std::fill(den.get(), den.get() + n, 0.0);
  std::fill(num.get(), num.get() + n, 0.0);
  std::fill(ker.get(), ker.get() + n, 0.0);
  for (std::size_t i = 0; i < ns; ++i) {
    const double lo = i * h, hi = (i + 1) * h;
    den[i] = gamma_mass(g.alpha, g.beta, lo, hi);
    // int s f_alpha(s) ds = alpha beta * mass of Gamma(alpha + 1)
    num[i] = g.alpha * g.beta * gamma_mass(g.alpha + 1.0, g.beta, lo, hi);
  }
  const double half = std::floor(reach / h);
  for (std::size_t j = 0; j < nb; ++j) {
    const double t = (static_cast<double>(j) - half) * h;
    ker[j] = std_normal_pdf(t / b.sigma) / b.sigma;
  }

  Plans plans;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plans.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), den.get(), fden.get(), FFTW_ESTIMATE);
    plans.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), fden.get(), den.get(), FFTW_ESTIMATE);
  }
  fftw_execute_dft_r2c(plans.forward, den.get(), fden.get());
  fftw_execute_dft_r2c(plans.forward, num.get(), fnum.get());
  fftw_execute_dft_r2c(plans.forward, ker.get(), fker.get());
  for (std::size_t k = 0; k < nc; ++k) {
    const std::complex<double> kk(fker[k][0], fker[k][1]);
    const std::complex<double> d = std::complex<double>(fden[k][0], fden[k][1]) * kk;
    const std::complex<double> m = std::complex<double>(fnum[k][0], fnum[k][1]) * kk;
    fden[k][0] = d.real();
    fden[k][1] = d.imag();
    fnum[k][0] = m.real();
    fnum[k][1] = m.imag();
  }
  fftw_execute_dft_c2r(plans.inverse, fden.get(), den.get());
  fftw_execute_dft_c2r(plans.inverse, fnum.get(), num.get());

  // Output k sits at p_k = mu + h/2 + (k - half) h.
  const std::size_t n_out = ns + nb - 1;
  double peak = 0.0;
  for (std::size_t k = 0; k < n_out; ++k) {
    den[k] /= static_cast<double>(n);
    num[k] /= static_cast<double>(n);
    peak = std::max(peak, den[k]);
  }
  // FFT rounding is absolute, of order eps times the peak; below this the ratio is noise.
  const double floor = 1e-11 * peak;
  const double p0 = b.mu + 0.5 * h - half * h;

  out.posterior_mean.resize(ps.size());
  out.log_marginal.resize(ps.size());
  for (std::size_t q = 0; q < ps.size(); ++q) {
    const double x = (ps[q] - p0) / h;
    const double base = std::floor(x) - 1.0;
    auto unresolved = [&](const std::string& why) {
      if (cfg.throw_on_unresolved) throw NumericError("gamma_normal_grid: p = " + std::to_string(ps[q]) + why);
      out.posterior_mean[q] = out.log_marginal[q] = std::numeric_limits<double>::quiet_NaN();
      out.unresolved.push_back(q);
    };
    if (!(base >= 0.0) || base + 3.0 >= static_cast<double>(n_out)) {
      unresolved(" lies outside the grid");
      continue;
    }
    const std::size_t k0 = static_cast<std::size_t>(base);
    // four-point Lagrange interpolation of ln f_P and of the posterior mean
    double ld = 0.0, mean = 0.0;
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i) {
      const double d = den[k0 + i];
      if (!(d > floor)) {
        ok = false;
        break;
      }
      double w = 1.0;
      for (int j = 0; j < 4; ++j)
        if (j != i) w *= (x - (base + j)) / static_cast<double>(i - j);
      ld += w * std::log(d);
      mean += w * num[k0 + i] / d;
    }
    if (!ok) {
      unresolved(": marginal density is below the grid's resolution");
      continue;
    }
    out.log_marginal[q] = ld;
    out.posterior_mean[q] = mean;
  }
  return out;
}

}  // namespace bgc

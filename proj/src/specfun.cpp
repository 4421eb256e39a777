#include "bgc/specfun.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "bgc/error.hpp"

namespace bgc {

namespace {

// Below this z, erfc(-z/sqrt2) underflows and the Mills-ratio expansion takes over.
constexpr double kTailSwitch = -37.0;

void require_positive(double x, const char* what) {
  if (!(x > 0.0)) throw DomainError(std::string(what) + ": argument must be positive, got " + std::to_string(x));
}

double log_lower_tail_asymptotic(double z) {
  const double w = 1.0 / (z * z);
  const double series = 1.0 + w * (-1.0 + w * (3.0 + w * (-15.0 + w * (105.0 + w * -945.0))));
  return -0.5 * z * z - std::log(-z) - kLogSqrt2Pi + std::log(series);
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  return std::lgamma(x);
}

double log_beta(double u, double v) {
  require_positive(u, "log_beta");
  require_positive(v, "log_beta");
  return std::lgamma(u) + std::lgamma(v) - std::lgamma(u + v);
}

double beta_fn(double u, double v) { return std::exp(log_beta(u, v)); }

double digamma(double x) {
  require_positive(x, "digamma");
  return boost::math::digamma(x);
}

double lower_incomplete_gamma(double s, double x) {
  require_positive(s, "lower_incomplete_gamma");
  if (!(x >= 0.0)) throw DomainError("lower_incomplete_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  return boost::math::tgamma_lower(s, x);
}

double regularized_gamma_p(double s, double x) {
  require_positive(s, "regularized_gamma_p");
  if (!(x >= 0.0)) throw DomainError("regularized_gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(s, x);
}

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double std_normal_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double log_std_normal_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double log_std_normal_cdf(double z) {
  if (std::isnan(z)) return z;
  if (z == std::numeric_limits<double>::infinity()) return 0.0;
  if (z == -std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / kSqrt2));
  if (z > kTailSwitch) return std::log(0.5 * std::erfc(-z / kSqrt2));
  return log_lower_tail_asymptotic(z);
}

double log_std_normal_sf(double z) { return log_std_normal_cdf(-z); }

double log_std_normal_interval(double lo, double hi) {
  if (!(lo < hi)) return -std::numeric_limits<double>::infinity();
  if (lo >= 0.0) {
    const double a = log_std_normal_sf(lo);
    const double b = log_std_normal_sf(hi);
    return a + std::log1p(-std::exp(b - a));
  }
  if (hi <= 0.0) {
    const double a = log_std_normal_cdf(hi);
    const double b = log_std_normal_cdf(lo);
    return a + std::log1p(-std::exp(b - a));
  }
  // Straddles zero: both excluded tails are below one half.
  return std::log1p(-(std_normal_cdf(lo) + std_normal_sf(hi)));
}

double gen_binomial(double r, std::size_t k) {
  double out = 1.0;
  for (std::size_t i = 0; i < k; ++i) out *= (r - static_cast<double>(i)) / static_cast<double>(i + 1);
  return out;
}

double gen_binomial_log_derivative(double r, std::size_t k) {
  double out = 0.0;
  for (std::size_t i = 0; i < k; ++i) out += 1.0 / (r - static_cast<double>(i));
  return out;
}

std::vector<double> scaled_gaussian_moments(unsigned n_max, double lo, double hi, double t) {
  std::vector<double> g(n_max + 1, 0.0);
  if (!(lo < hi)) return g;
  // t * ((t lo)^(n-1) e^(-lo^2/2) - (t hi)^(n-1) e^(-hi^2/2)), in logs so large powers don't overflow
  auto edge = [&](double z, unsigned n) {
    if (std::isinf(z)) return 0.0;
    const double tz = t * z;
    if (tz == 0.0) return n == 1 ? std::exp(-0.5 * z * z) : 0.0;
    const double mag = std::exp((n - 1.0) * std::log(std::abs(tz)) - 0.5 * z * z);
    return (tz < 0.0 && (n - 1) % 2 == 1) ? -mag : mag;
  };
  auto boundary = [&](unsigned n) { return t * (edge(lo, n) - edge(hi, n)); };
  g[0] = std::exp(log_std_normal_interval(lo, hi) + kLogSqrt2Pi);
  if (n_max == 0) return g;
  g[1] = boundary(1);
  // g_n = B_n + (n-1) t^2 g_(n-2). Going up, rounding error grows by (n-1) t^2 per step,
  // harmless while the moments grow as fast (bulk of z^n e^(-z^2/2) inside the interval).
  // Once the moments are edge-dominated, run the recurrence downward from zero seeds.
  const double t2 = t * t;
  const double z_max = std::max(std::abs(lo), std::abs(hi));
  unsigned up = n_max;
  if (std::isfinite(z_max) && t2 > 0.0) {
    const double switch_at = std::max(1.0 / t2, z_max * z_max) + 1.0;
    if (switch_at < n_max) up = std::max(2u, static_cast<unsigned>(switch_at));
  }
  for (unsigned n = 2; n <= up; ++n) g[n] = boundary(n) + static_cast<double>(n - 1) * t2 * g[n - 2];
  if (up >= n_max) return g;
  // extend until the seeds' error, net of the moments' own growth, is damped by 1e-40
  const double growth = std::max(0.0, std::log(t * z_max));
  unsigned top = n_max;
  for (double damp = 0.0; damp < 40.0 * std::log(10.0) || top < n_max + 4; ++top)
    damp += std::max(0.0, std::log(top * t2) - growth);
  std::vector<double> h(top + 2, 0.0);
  for (unsigned n = top + 1; n >= up + 1; --n) h[n - 2] = (h[n] - boundary(n)) / (static_cast<double>(n - 1) * t2);
  for (unsigned n = up + 1; n <= n_max; ++n) g[n] = h[n];
  return g;
}

double gaussian_moment_integral(unsigned n, double lo, double hi) {
  if (lo > hi) return -gaussian_moment_integral(n, hi, lo);
  return scaled_gaussian_moments(n, lo, hi, 1.0)[n];
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace bgc

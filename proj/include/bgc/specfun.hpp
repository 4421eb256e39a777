#pragma once

#include <cstddef>
#include <vector>

// Special functions shared by the densities, the series and the score
// equations. Everything here is pure; gamma/beta quantities are evaluated in
// log space.

namespace bgc {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;
inline constexpr double kPi = 3.14159265358979323846264338;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973;
inline constexpr double kSqrt2 = 1.41421356237309504880168872;

double log_gamma(double x);
double log_beta(double u, double v);
double beta_fn(double u, double v);
double digamma(double x);

// gamma(s, x) = int_0^x t^(s-1) e^-t dt (unregularized).
double lower_incomplete_gamma(double s, double x);
// P(s, x) = gamma(s, x) / Gamma(s).
double regularized_gamma_p(double s, double x);

double std_normal_pdf(double z);
double std_normal_cdf(double z);
// Upper tail 1 - Phi(z), accurate for large positive z.
double std_normal_sf(double z);
double log_std_normal_pdf(double z);
// ln Phi(z), finite down to z = -1e150.
double log_std_normal_cdf(double z);
double log_std_normal_sf(double z);
// ln(Phi(hi) - Phi(lo)) for lo < hi without cancellation in either tail.
double log_std_normal_interval(double lo, double hi);

// r(r-1)...(r-k+1)/k!; 1 for k = 0.
double gen_binomial(double r, std::size_t k);
// d/dr ln|gen_binomial(r, k)| = sum_{i<k} 1/(r - i).
double gen_binomial_log_derivative(double r, std::size_t k);

// int_lo^hi z^n e^{-z^2/2} dz by the exact moment recurrence; lo/hi may be infinite.
double gaussian_moment_integral(unsigned n, double lo, double hi);
// t^n * int_lo^hi z^n e^{-z^2/2} dz for n = 0..n_max, sharing one recurrence.
std::vector<double> scaled_gaussian_moments(unsigned n_max, double lo, double hi, double t);

// ln(e^a + e^b) without overflow.
double log_add_exp(double a, double b);

}  // namespace bgc

#include "bgc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "bgc/error.hpp"

namespace bgc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool noise_positive(const ModelSpec& m) {
  return !std::holds_alternative<NormalParams>(noise_of(m)) || noise_truncated_at_zero(m);
}

}  // namespace

SignalRange signal_range(double p, const ModelSpec& m) {
  const Dist sig = signal_of(m);
  const Dist noi = noise_of(m);
  SignalRange r{0.0, support_upper(sig)};
  if (noise_positive(m)) r.hi = std::min(r.hi, p);
  const double noise_up = support_upper(noi);
  if (std::isfinite(noise_up)) r.lo = std::max(r.lo, p - noise_up);
  return r;
}

ConvolutionIntegral integrate_convolution(double p, const ModelSpec& m, const QuadConfig& q) {
  validate(m);
  q.validate();
  const Dist sig = signal_of(m);
  const Dist noi = noise_of(m);
  const SignalRange range = signal_range(p, m);
  ConvolutionIntegral out;
  out.log_marginal = -kInf;
  out.posterior_mean = std::numeric_limits<double>::quiet_NaN();
  if (!(range.hi > range.lo)) return out;

  auto log_integrand = [&](double s) { return log_pdf(s, sig) + log_pdf(p - s, noi); };

  std::vector<double> knots;
  for (double x : landmarks(sig)) knots.push_back(x);
  for (double x : landmarks(noi)) knots.push_back(p - x);
  std::erase_if(knots, [&](double x) { return !(x > range.lo && x < range.hi); });
  knots.push_back(range.lo);
  knots.push_back(range.hi);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  // Peak of the log integrand: scan the knots and points between them, then
  // refine the best bracket by golden section and keep the peak as a knot.
  std::vector<double> xs;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i], b = knots[i + 1];
    if (std::isfinite(a)) xs.push_back(a);
    if (std::isinf(b)) {
      for (double k : {1.0, 4.0, 16.0, 64.0}) xs.push_back(a + k * std::max(1.0, std::abs(a)));
      continue;
    }
    for (int j = 1; j < 17; ++j) xs.push_back(a + (b - a) * j / 17.0);
  }
  if (std::isfinite(knots.back())) xs.push_back(knots.back());
  double shift = -kInf;
  std::size_t best = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double h = log_integrand(xs[i]);
    if (std::isfinite(h) && h > shift) {
      shift = h;
      best = i;
    }
  }
  if (!std::isfinite(shift)) return out;
  {
    double a = best > 0 ? xs[best - 1] : xs[best];
    double b = best + 1 < xs.size() ? xs[best + 1] : xs[best];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80 && b - a > 1e-14 * std::max(1.0, std::abs(a)); ++it) {
      const double c = b - g * (b - a), d = a + g * (b - a);
      double hc = log_integrand(c), hd = log_integrand(d);
      if (!std::isfinite(hc)) hc = -kInf;
      if (!std::isfinite(hd)) hd = -kInf;
      if (hc > hd) b = d; else a = c;
    }
    double peak = 0.5 * (a + b);
    const double h = log_integrand(peak);
    if (std::isfinite(h) && h > shift)
      shift = h;
    else
      peak = xs[best];
    if (peak > range.lo && peak < range.hi) knots.push_back(peak);
    // A narrow peak can hide between the nodes of a wide first panel: find
    // where the integrand has dropped by e^2 on each side and place knots at
    // geometrically growing distances from there.
    const double span_scale = std::max({1.0, std::abs(peak), std::isfinite(range.hi - range.lo) ? range.hi - range.lo : 0.0});
    for (double dir : {-1.0, 1.0}) {
      const double edge = dir < 0 ? range.lo : range.hi;
      double width = 0.0;
      for (double delta = 1e-13 * span_scale; delta < 1e3 * span_scale; delta *= 2.0) {
        const double x = peak + dir * delta;
        if (dir < 0 ? x <= edge : x >= edge) break;
        const double v = log_integrand(x);
        if (!(v > shift - 2.0)) {
          width = delta;
          break;
        }
      }
      if (width == 0.0) continue;
      for (double k = 1.0; k < 1e7; k *= 4.0) {
        const double x = peak + dir * k * width;
        if (dir < 0 ? x <= edge : x >= edge) break;
        knots.push_back(x);
      }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  }

  QuadConfig local = q;
  local.abs_tol = q.abs_tol * 1e-6;
  {
    // The log integrand carries absolute rounding of order eps * |ln f|, which
    // bounds the attainable relative accuracy far out in the tails.
    const double peak = xs[best];
    const double magnitude = std::abs(log_pdf(peak, sig)) + std::abs(log_pdf(p - peak, noi));
    local.rel_tol = std::max(q.rel_tol, 64.0 * std::numeric_limits<double>::epsilon() * magnitude);
  }
  auto f = [&](double s) {
    const double e = std::exp(log_integrand(s) - shift);
    return std::array<double, 2>{e, s * e};
  };
  const auto res = integrate<2>(f, std::span<const double>(knots), local);
  if (!(res.value[0] > 0.0)) return out;
  out.log_marginal = std::log(res.value[0]) + shift;
  out.posterior_mean = res.value[1] / res.value[0];
  out.rel_error = std::max(res.error[0] / res.value[0], res.error[1] / std::abs(res.value[1]));
  out.subdivisions = res.subdivisions;
  return out;
}

double log_marginal_pdf_quadrature(double p, const ModelSpec& m, const QuadConfig& q) {
  return integrate_convolution(p, m, q).log_marginal;
}

double marginal_pdf_quadrature(double p, const ModelSpec& m, const QuadConfig& q) {
  return std::exp(log_marginal_pdf_quadrature(p, m, q));
}

double posterior_mean_quadrature(double p, const ModelSpec& m, const QuadConfig& q) {
  const auto r = integrate_convolution(p, m, q);
  if (!std::isfinite(r.log_marginal))
    throw NumericError("posterior_mean_quadrature: marginal density underflows at p = " + std::to_string(p));
  return r.posterior_mean;
}

}  // namespace bgc

#include "bgc/correct.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <span>

#include "bgc/error.hpp"
#include "bgc/gamma_normal_grid.hpp"
#include "bgc/log_sum.hpp"
#include "bgc/oracle.hpp"
#include "bgc/specfun.hpp"

namespace bgc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_p(double p, const char* what) {
  if (!(p > 0.0) || !std::isfinite(p)) throw DomainError(std::string(what) + ": p must be positive and finite");
}

// 1/R(x) - x with R the Mills ratio Q(x)/phi(x): the continued fraction
// 1/(x + 2/(x + 3/(x + ...))), free of the cancellation in phi/Q - x. x >= 2.
double mills_excess(double x) {
  const double tiny = 1e-300;
  double f = x, c = x, d = 0.0;
  for (int n = 2; n < 100000; ++n) {
    d = x + n * d;
    d = d == 0.0 ? tiny : 1.0 / d;
    c = x + n / c;
    if (c == 0.0) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

// E[Z - lo | lo < Z < lo + w] for a standard normal Z, lo >= 0, w > 0 (may be inf).
double truncated_excess(double lo, double w) {
  if (w <= 4.0 && lo * w <= 20.0) {
    // smooth weight e^(-lo x - x^2/2) over a short interval
    const auto& nodes = boost::math::quadrature::gauss<double, 30>::abscissa();
    const auto& weights = boost::math::quadrature::gauss<double, 30>::weights();
    double m0 = 0.0, m1 = 0.0;
    auto add = [&](double t, double wt) {
      const double x = 0.5 * w * (1.0 + t);
      const double f = wt * std::exp(-lo * x - 0.5 * x * x);
      m0 += f;
      m1 += x * f;
    };
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      add(nodes[i], weights[i]);
      if (nodes[i] != 0.0) add(-nodes[i], weights[i]);
    }
    return m1 / m0;
  }
  if (lo < 2.0) {
    const double hi = lo + w;
    const double log_den = log_std_normal_interval(lo, hi);
    const double a = log_std_normal_pdf(lo), b = log_std_normal_pdf(hi);
    return std::exp(a + std::log1p(-std::exp(b - a)) - log_den) - lo;
  }
  // E[X] = (R(lo) T(lo) - E_w R(hi) (T(hi) + w)) / (R(lo) - E_w R(hi)) with
  // T = 1/R - x and E_w = e^(-lo w - w^2/2), the weight ratio at the far end.
  const double t_lo = mills_excess(lo);
  const double r_lo = 1.0 / (lo + t_lo);
  if (std::isinf(w)) return t_lo;
  const double e_w = std::exp(-lo * w - 0.5 * w * w);
  if (e_w == 0.0) return t_lo;
  const double t_hi = mills_excess(lo + w);
  const double r_hi = 1.0 / (lo + w + t_hi);
  return (r_lo * t_lo - e_w * r_hi * (t_hi + w)) / (r_lo - e_w * r_hi);
}

// Mean of normal(m, s) truncated to (0, upper), upper may be inf, measured
// from whichever end is closest to the mass so that no digits cancel.
double truncated_normal_mean(double m, double s, double upper) {
  const double lo = -m / s, hi = (upper - m) / s;
  if (lo >= 0.0) return s * truncated_excess(lo, hi - lo);
  if (hi <= 0.0) return upper - s * truncated_excess(-hi, hi - lo);
  const double log_den = log_std_normal_interval(lo, hi);
  const double a = log_std_normal_pdf(lo), b = std::isinf(hi) ? -kInf : log_std_normal_pdf(hi);
  if (a == b) return m;
  const double big = std::max(a, b);
  const double log_num = big + std::log1p(-std::exp(std::min(a, b) - big));
  return m + s * (a > b ? 1.0 : -1.0) * std::exp(log_num - log_den);
}

// ln int_0^1 z^(alpha-1) e^(-x z) dz by a series with positive terms.
double log_unit_gamma_integral(double alpha, double x) {
  LogSum sum;
  if (x >= 0.0) {
    // e^(-x) sum_k x^k / (alpha (alpha+1) ... (alpha+k))
    double lt = -std::log(alpha);
    for (int k = 0;; ++k) {
      sum.add(LogTerm::from_log(lt));
      if (k > 0 && lt < sum.total().log_abs - 40.0 && x < alpha + k) break;
      if (x == 0.0) break;
      lt += std::log(x) - std::log(alpha + k + 1);
      if (k > 10000000) throw NumericError("log_gamma_partial_integral: series did not converge");
    }
    return sum.total().log_abs - x;
  }
  // sum_k |x|^k / (k! (alpha + k))
  const double ax = -x;
  for (int k = 0;; ++k) {
    const double lt = k * std::log(ax) - std::lgamma(k + 1.0) - std::log(alpha + k);
    sum.add(LogTerm::from_log(lt));
    if (k > ax && lt < sum.total().log_abs - 40.0) break;
    if (k > 10000000) throw NumericError("log_gamma_partial_integral: series did not converge");
  }
  return sum.total().log_abs;
}

Correction quadrature_mean(double p, const ModelSpec& m, const CorrectConfig& cfg) {
  return {posterior_mean_quadrature(p, m, cfg.quad), CorrectionPath::quadrature};
}

Correction quadrature_log_marginal(double p, const ModelSpec& m, const CorrectConfig& cfg, const char* what) {
  const double v = log_marginal_pdf_quadrature(p, m, cfg.quad);
  if (v == -kInf) throw NumericError(std::string(what) + ": marginal density underflows at p = " + std::to_string(p));
  return {v, CorrectionPath::quadrature};
}

// Runs the series evaluation when allowed, else the quadrature route. A series
// value outside (0, p) is treated as a failed series.
template <class Series>
Correction with_fallback(double p, bool region_ok, const ModelSpec& m, const CorrectConfig& cfg, Series&& series,
                         const char* what) {
  if (region_ok) {
    try {
      const double v = series();
      if (std::isfinite(v) && v > 0.0 && v < p) return {v, CorrectionPath::series};
      if (!cfg.fallback)
        throw SeriesError(std::string(what) + ": series value " + std::to_string(v) + " lies outside (0, p)");
    } catch (const SeriesError&) {
      if (!cfg.fallback) throw;
    }
  } else if (!cfg.fallback) {
    throw SeriesError(std::string(what) + ": p = " + std::to_string(p) + " lies outside the series region");
  }
  return quadrature_mean(p, m, cfg);
}

template <class Series>
Correction log_with_fallback(double p, bool region_ok, const ModelSpec& m, const CorrectConfig& cfg, Series&& series,
                             const char* what) {
  if (region_ok) {
    try {
      const double v = series();
      if (std::isfinite(v)) return {v, CorrectionPath::series};
      if (!cfg.fallback) throw SeriesError(std::string(what) + ": series log density is not finite");
    } catch (const SeriesError&) {
      if (!cfg.fallback) throw;
    }
  } else if (!cfg.fallback) {
    throw SeriesError(std::string(what) + ": p = " + std::to_string(p) + " lies outside the series region");
  }
  return quadrature_log_marginal(p, m, cfg, what);
}

struct GammaNormalIntegral {
  double log_marginal;
  double mean;
};

// Both integrals over s in (0, inf) on one subdivision tree; the numerator
// uses s f_alpha(s) = alpha beta f_(alpha+1)(s).
GammaNormalIntegral gamma_normal_quadrature(double p, const GammaParams& g, const NormalParams& b,
                                            const QuadConfig& q) {
  g.validate();
  b.validate();
  q.validate();
  if (!std::isfinite(p)) throw DomainError("correct_gamma_normal: p must be finite");
  const GammaParams shifted{g.alpha + 1.0, g.beta};
  const double log_ab = std::log(g.alpha) + std::log(g.beta);
  auto log_noise = [&](double s) { return log_std_normal_pdf((p - s - b.mu) / b.sigma) - std::log(b.sigma); };
  auto log_den = [&](double s) { return log_pdf(s, g) + log_noise(s); };

  // Mode of the denominator integrand: s^2 - m s - (alpha-1) sigma^2 = 0.
  const double m = p - b.mu - b.sigma * b.sigma / g.beta;
  const double disc = m * m + 4.0 * (g.alpha - 1.0) * b.sigma * b.sigma;
  std::vector<double> knots{0.0};
  if (disc >= 0.0) {
    const double mode = 0.5 * (m + std::sqrt(disc));
    if (mode > 0.0) {
      knots.push_back(mode);
      for (double k : {-8.0, -3.0, 3.0, 8.0})
        if (mode + k * b.sigma > 0.0) knots.push_back(mode + k * b.sigma);
    }
  }
  for (double x : {g.beta * g.alpha, b.sigma, p - b.mu})
    if (x > 0.0) knots.push_back(x);
  double shift = -kInf, peak = 0.0;
  for (double x : knots)
    if (x > 0.0 && log_den(x) > shift) {
      shift = log_den(x);
      peak = x;
    }
  if (!std::isfinite(shift)) throw NumericError("correct_gamma_normal: integrand underflows at p = " + std::to_string(p));
  knots.push_back(kInf);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  QuadConfig local = q;
  local.abs_tol = q.abs_tol * 1e-6;
  // rounding in a large log integrand limits the attainable relative accuracy
  const double magnitude = std::abs(log_pdf(peak, g)) + std::abs(log_noise(peak));
  local.rel_tol = std::max(q.rel_tol, 64.0 * std::numeric_limits<double>::epsilon() * magnitude);
  auto f = [&](double s) {
    if (!(s > 0.0)) return std::array<double, 2>{0.0, 0.0};
    const double ln = log_noise(s);
    return std::array<double, 2>{std::exp(log_pdf(s, g) + ln - shift),
                                 std::exp(log_ab + log_pdf(s, shifted) + ln - shift)};
  };
  const auto r = integrate<2>(f, std::span<const double>(knots), local);
  if (!(r.value[0] > 0.0))
    throw NumericError("correct_gamma_normal: marginal density underflows at p = " + std::to_string(p));
  return {std::log(r.value[0]) + shift, r.value[1] / r.value[0]};
}

}  // namespace

std::string path_name(CorrectionPath p) {
  switch (p) {
    case CorrectionPath::closed_form: return "closed_form";
    case CorrectionPath::series: return "series";
    case CorrectionPath::quadrature: return "quadrature";
    case CorrectionPath::grid: return "grid";
  }
  return "unknown";
}

void CorrectConfig::validate() const {
  series.validate();
  quad.validate();
  if (!(grid_points_per_sigma >= 4.0)) throw InvalidParameter("correct: grid_points_per_sigma must be at least 4");
}

double exp_normal_mu_sp(double p, const ExpParams& e, const NormalParams& b) {
  return p - b.mu - b.sigma * b.sigma * e.theta;
}

double correct_rma(double p, const ExpParams& e, const NormalParams& b) {
  require_positive_p(p, "correct_rma");
  e.validate();
  b.validate();
  // normal(mu_sp, sigma) truncated to (0, p)
  return truncated_normal_mean(exp_normal_mu_sp(p, e, b), b.sigma, p);
}

double correct_mbcb(double p, const ExpParams& e, const NormalParams& b) {
  require_positive_p(p, "correct_mbcb");
  e.validate();
  b.validate();
  return truncated_normal_mean(exp_normal_mu_sp(p, e, b), b.sigma, kInf);
}

double log_gamma_partial_integral(double alpha, double lambda, double p) {
  if (!(alpha > 0.0)) throw InvalidParameter("log_gamma_partial_integral: alpha must be positive");
  require_positive_p(p, "log_gamma_partial_integral");
  const double x = lambda * p;
  if (x > 0.0) {
    const double reg = regularized_gamma_p(alpha, x);
    if (reg > 1e-250) return std::log(reg) + std::lgamma(alpha) - alpha * std::log(lambda);
  }
  return alpha * std::log(p) + log_unit_gamma_integral(alpha, x);
}

double correct_exp_gamma(double p, const ExpParams& e, const GammaParams& g) {
  require_positive_p(p, "correct_exp_gamma");
  e.validate();
  g.validate();
  const double lambda = 1.0 / g.beta - e.theta;
  const double noise_mean =
      std::exp(log_gamma_partial_integral(g.alpha + 1.0, lambda, p) - log_gamma_partial_integral(g.alpha, lambda, p));
  return p - noise_mean;
}

double correct_gamma_normal(double p, const GammaParams& g, const NormalParams& b, const QuadConfig& q) {
  return gamma_normal_quadrature(p, g, b, q).mean;
}

Correction correct_exp_lognormal(double p, const ExpParams& e, const LognormalParams& l, const CorrectConfig& cfg) {
  require_positive_p(p, "correct_exp_lognormal");
  const ModelSpec m = ExpLognormal{e, l};
  validate(m);
  return with_fallback(
      p, true, m, cfg,
      [&] {
        const auto c1 = eval_C1(p, e, l, cfg.series), c2 = eval_C2(p, e, l, cfg.series);
        return p - std::exp(l.mu + 0.5 * l.sigma * l.sigma + c2.log_abs - c1.log_abs);
      },
      "correct_exp_lognormal");
}

Correction correct_gamma_lognormal(double p, const GammaParams& g, const LognormalParams& l,
                                   const CorrectConfig& cfg) {
  require_positive_p(p, "correct_gamma_lognormal");
  const ModelSpec m = GammaLognormal{g, l};
  validate(m);
  return with_fallback(
      p, convergence_ok(p, g, l), m, cfg,
      [&] {
        const auto c3 = eval_C3(p, g, l, cfg.series), c4 = eval_C4(p, g, l, cfg.series);
        if (c3.sign <= 0 || c4.sign <= 0) throw SeriesError("correct_gamma_lognormal: nonpositive series value");
        return p * std::exp(c4.log_abs - c3.log_abs);
      },
      "correct_gamma_lognormal");
}

Correction correct_gb(double p, const GBParams& s, const GBParams& b, const CorrectConfig& cfg) {
  require_positive_p(p, "correct_gb");
  const ModelSpec m = GBGB{s, b};
  validate(m);
  return with_fallback(
      p, convergence_ok(p, s, b), m, cfg,
      [&] {
        const auto c5 = eval_C5(p, s, b, cfg.series), c6 = eval_C6(p, s, b, cfg.series);
        return p * std::exp(c6.log_abs - c5.log_abs);
      },
      "correct_gb");
}

Correction correct_gb_normal(double p, const GBParams& s, const NormalParams& b, const CorrectConfig& cfg) {
  require_positive_p(p, "correct_gb_normal");
  const ModelSpec m = GBNormal{s, b};
  validate(m);
  return with_fallback(
      p, convergence_ok(p, s, b), m, cfg,
      [&] {
        const auto c7 = eval_C7(p, s, b, cfg.series), c8 = eval_C8(p, s, b, cfg.series);
        return p * std::exp(c8.log_abs - c7.log_abs);
      },
      "correct_gb_normal");
}

Correction correct(double p, const ModelSpec& m, const CorrectConfig& cfg) {
  return std::visit(
      [&](const auto& x) -> Correction {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ExpNormal>) {
          const double v = x.bound == ExpNormalBound::observed ? correct_rma(p, x.signal, x.noise)
                                                               : correct_mbcb(p, x.signal, x.noise);
          return {v, CorrectionPath::closed_form};
        } else if constexpr (std::is_same_v<T, ExpGamma>) {
          return {correct_exp_gamma(p, x.signal, x.noise), CorrectionPath::closed_form};
        } else if constexpr (std::is_same_v<T, GammaNormal>) {
          if (cfg.gamma_normal == GammaNormalBackend::grid) {
            GridConfig gc;
            gc.points_per_sigma = cfg.grid_points_per_sigma;
            const double ps[] = {p};
            try {
              return {gamma_normal_grid(ps, x.signal, x.noise, gc).posterior_mean[0], CorrectionPath::grid};
            } catch (const NumericError&) {
              if (!cfg.fallback) throw;
            }
          }
          return {correct_gamma_normal(p, x.signal, x.noise, cfg.quad), CorrectionPath::quadrature};
        } else if constexpr (std::is_same_v<T, ExpLognormal>) {
          return correct_exp_lognormal(p, x.signal, x.noise, cfg);
        } else if constexpr (std::is_same_v<T, GammaLognormal>) {
          return correct_gamma_lognormal(p, x.signal, x.noise, cfg);
        } else if constexpr (std::is_same_v<T, GBGB>) {
          return correct_gb(p, x.signal, x.noise, cfg);
        } else {
          return correct_gb_normal(p, x.signal, x.noise, cfg);
        }
      },
      m);
}

Correction log_marginal(double p, const ModelSpec& m, const CorrectConfig& cfg) {
  validate(m);
  return std::visit(
      [&](const auto& x) -> Correction {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, ExpNormal>) {
          if (!std::isfinite(p)) throw DomainError("log_marginal: p must be finite");
          // theta e^(-theta (p - mu) + theta^2 sigma^2 / 2) P(0 < N(mu_sp, sigma) < upper)
          const double th = x.signal.theta, sg = x.noise.sigma;
          const double z = exp_normal_mu_sp(p, x.signal, x.noise) / sg;
          double lp;
          if (x.bound == ExpNormalBound::observed) {
            if (!(p > 0.0)) throw DomainError("log_marginal: p must be positive under the RMA model");
            lp = log_std_normal_interval(-z, p / sg - z);
          } else {
            lp = log_std_normal_cdf(z);
          }
          const double v = std::log(th) - th * (p - x.noise.mu) + 0.5 * th * th * sg * sg + lp;
          if (!std::isfinite(v)) throw NumericError("log_marginal: exp-normal marginal underflows at p = " + std::to_string(p));
          return {v, CorrectionPath::closed_form};
        } else if constexpr (std::is_same_v<T, ExpGamma>) {
          require_positive_p(p, "log_marginal");
          // theta e^(-theta p) / (Gamma(alpha) beta^alpha) int_0^p b^(alpha-1) e^(-(1/beta - theta) b) db
          const double th = x.signal.theta, al = x.noise.alpha, be = x.noise.beta;
          const double v = std::log(th) - th * p - std::lgamma(al) - al * std::log(be) +
                           log_gamma_partial_integral(al, 1.0 / be - th, p);
          return {v, CorrectionPath::closed_form};
        } else if constexpr (std::is_same_v<T, GammaNormal>) {
          if (cfg.gamma_normal == GammaNormalBackend::grid) {
            GridConfig gc;
            gc.points_per_sigma = cfg.grid_points_per_sigma;
            const double ps[] = {p};
            try {
              return {gamma_normal_grid(ps, x.signal, x.noise, gc).log_marginal[0], CorrectionPath::grid};
            } catch (const NumericError&) {
              if (!cfg.fallback) throw;
            }
          }
          return {gamma_normal_quadrature(p, x.signal, x.noise, cfg.quad).log_marginal, CorrectionPath::quadrature};
        } else if constexpr (std::is_same_v<T, ExpLognormal>) {
          require_positive_p(p, "log_marginal");
          return log_with_fallback(
              p, true, m, cfg, [&] { return log_marginal_exp_lognormal(p, x.signal, x.noise, cfg.series); },
              "log_marginal");
        } else if constexpr (std::is_same_v<T, GammaLognormal>) {
          require_positive_p(p, "log_marginal");
          return log_with_fallback(
              p, convergence_ok(p, x.signal, x.noise), m, cfg,
              [&] { return log_marginal_gamma_lognormal(p, x.signal, x.noise, cfg.series); }, "log_marginal");
        } else if constexpr (std::is_same_v<T, GBGB>) {
          require_positive_p(p, "log_marginal");
          return log_with_fallback(
              p, convergence_ok(p, x.signal, x.noise), m, cfg,
              [&] { return log_marginal_gb(p, x.signal, x.noise, cfg.series); }, "log_marginal");
        } else {
          require_positive_p(p, "log_marginal");
          return log_with_fallback(
              p, convergence_ok(p, x.signal, x.noise), m, cfg,
              [&] { return log_marginal_gb_normal(p, x.signal, x.noise, cfg.series); }, "log_marginal");
        }
      },
      m);
}

namespace {

bool has_series(const ModelSpec& m) {
  return std::holds_alternative<ExpLognormal>(m) || std::holds_alternative<GammaLognormal>(m) ||
         std::holds_alternative<GBGB>(m) || std::holds_alternative<GBNormal>(m);
}

void correct_one(std::size_t i, double p, const ModelSpec& m, const CorrectConfig& cfg, ArrayCorrection& out) {
  try {
    const Correction c = correct(p, m, cfg);
    out.values[i] = c.value;
    out.paths[i] = c.path;
  } catch (const std::exception& ex) {
    out.values[i] = std::numeric_limits<double>::quiet_NaN();
    out.errors[i] = ex.what();
  }
}

ArrayCorrection prepare(std::size_t n) {
  ArrayCorrection out;
  out.values.assign(n, 0.0);
  out.paths.assign(n, CorrectionPath::closed_form);
  out.errors.assign(n, std::string());
  out.fell_back.assign(n, 0);
  return out;
}

void tally(ArrayCorrection& out, const ModelSpec& m) {
  const bool series = has_series(m);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (!out.errors[i].empty())
      ++out.failed;
    else if (series && out.paths[i] == CorrectionPath::quadrature) {
      ++out.fallbacks;
      out.fell_back[i] = 1;
    }
  }
}

// The grid backend evaluates every gene from one convolution.
bool grid_batch(std::span<const double> observed, const ModelSpec& m, const CorrectConfig& cfg, ArrayCorrection& out) {
  const auto* gn = std::get_if<GammaNormal>(&m);
  if (!gn || cfg.gamma_normal != GammaNormalBackend::grid) return false;
  GridConfig gc;
  gc.points_per_sigma = cfg.grid_points_per_sigma;
  gc.throw_on_unresolved = false;
  GridResult r;
  try {
    r = gamma_normal_grid(observed, gn->signal, gn->noise, gc);
  } catch (const NumericError&) {
    return false;  // grid too large; go gene by gene
  }
  for (std::size_t i = 0; i < observed.size(); ++i) {
    out.values[i] = r.posterior_mean[i];
    out.paths[i] = CorrectionPath::grid;
  }
  // genes the grid cannot resolve go to quadrature
  CorrectConfig quad = cfg;
  quad.gamma_normal = GammaNormalBackend::quadrature;
  for (std::size_t i : r.unresolved) {
    if (cfg.fallback) {
      correct_one(i, observed[i], m, quad, out);
    } else {
      out.values[i] = std::numeric_limits<double>::quiet_NaN();
      out.errors[i] = "gamma_normal_grid: p = " + std::to_string(observed[i]) + " is not resolved by the grid";
    }
  }
  return true;
}

}  // namespace

ArrayCorrection correct_array(std::span<const double> observed, const ModelSpec& m, const CorrectConfig& cfg) {
  validate(m);
  cfg.validate();
  ArrayCorrection out = prepare(observed.size());
  if (!grid_batch(observed, m, cfg, out)) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(observed.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      correct_one(static_cast<std::size_t>(i), observed[static_cast<std::size_t>(i)], m, cfg, out);
  }
  tally(out, m);
  return out;
}

ArrayCorrection correct_array_serial(std::span<const double> observed, const ModelSpec& m, const CorrectConfig& cfg) {
  validate(m);
  cfg.validate();
  ArrayCorrection out = prepare(observed.size());
  if (!grid_batch(observed, m, cfg, out))
    for (std::size_t i = 0; i < observed.size(); ++i) correct_one(i, observed[i], m, cfg, out);
  tally(out, m);
  return out;
}

}  // namespace bgc

#include "bgc/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgc/specfun.hpp"

namespace bgc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_p(double p, const char* what) {
  if (!(p > 0.0) || !std::isfinite(p)) throw DomainError(std::string(what) + ": p must be positive and finite");
}

SeriesValue finish(const LogSum& sum, std::vector<int> used, double log_factor) {
  SeriesValue out;
  LogTerm t = sum.total();
  out.sign = t.sign;
  out.log_abs = t.zero() ? -kInf : t.log_abs + log_factor;
  out.value = t.zero() ? 0.0 : t.sign * std::exp(out.log_abs);
  out.terms_used = std::move(used);
  out.converged = true;
  out.condition = sum.condition();
  return out;
}

// ln M_j with M_j = int_0^p b^j f_LN(b) db = e^(j mu + j^2 sigma^2 / 2) Phi((ln p - mu - j sigma^2) / sigma).
double log_lognormal_partial_moment(double p, const LognormalParams& l, int j) {
  const double s2 = l.sigma * l.sigma;
  return j * l.mu + 0.5 * j * j * s2 + log_std_normal_cdf((std::log(p) - l.mu - j * s2) / l.sigma);
}

SeriesValue exp_lognormal_series(double p, const ExpParams& e, const LognormalParams& l, const SeriesConfig& cfg,
                                 int shift, const char* name) {
  require_positive_p(p, name);
  cfg.validate();
  if (!(e.theta >= 0.0) || !std::isfinite(e.theta)) throw InvalidParameter(std::string(name) + ": theta must be >= 0");
  l.validate();
  const double log_theta = std::log(e.theta);
  const double log_norm = shift ? l.mu + 0.5 * l.sigma * l.sigma : 0.0;
  auto term = [&](int k, int, std::array<LogTerm, 1>& out, LogTerm&) {
    if (k > 0 && e.theta == 0.0) return;
    const double lt = (k == 0 ? 0.0 : k * log_theta) - std::lgamma(k + 1.0) +
                      log_lognormal_partial_moment(p, l, k + shift) - log_norm;
    out[0] = LogTerm::from_log(lt);
  };
  auto r = detail::sum_rectangle<1>(term, 1, cfg, name);
  return finish(r.sums[0], {r.used[0]}, 0.0);
}

SeriesValue gamma_lognormal_series(double p, const GammaParams& g, const LognormalParams& l, const SeriesConfig& cfg,
                                   double binom_top, const char* name) {
  require_positive_p(p, name);
  cfg.validate();
  g.validate();
  l.validate();
  detail::BinomialRow binom(binom_top);
  std::vector<double> log_mhat;  // ln(M_j / p^j)
  const double log_p = std::log(p);
  const double log_ratio = log_p - std::log(g.beta);
  auto mhat = [&](int j) {
    while (static_cast<int>(log_mhat.size()) <= j) {
      const int i = static_cast<int>(log_mhat.size());
      log_mhat.push_back(log_lognormal_partial_moment(p, l, i) - i * log_p);
    }
    return log_mhat[j];
  };
  auto term = [&](int k, int n, std::array<LogTerm, 1>& out, LogTerm&) {
    const LogTerm b = binom.at(k);
    if (b.zero()) return;
    const double lt = b.log_abs + n * log_ratio - std::lgamma(n + 1.0) + mhat(k + n);
    out[0] = LogTerm::from_log(lt, (k % 2 ? -1 : 1) * b.sign);
  };
  auto r = detail::sum_rectangle<1>(term, 2, cfg, name);
  return finish(r.sums[0], {r.used[0], r.used[1]}, 0.0);
}

double beta_shift_first(const SeriesConfig& cfg) { return cfg.beta_args == BetaArgs::corrected ? 0.0 : -1.0; }

double checked_log_beta(double x, double y, const char* name) {
  if (!(x > 0.0) || !(y > 0.0))
    throw DomainError(std::string(name) + ": beta-function argument is not positive (B(" + std::to_string(x) + ", " +
                      std::to_string(y) + "))");
  return log_beta(x, y);
}

double gb_log_y(double x, const GBParams& g) { return g.a * (std::log(x) - std::log(g.d)); }

// moment = 0 (C5) or 1 (C6).
SeriesValue gbgb_series(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg, int moment,
                        const char* name) {
  require_positive_p(p, name);
  cfg.validate();
  s.validate();
  b.validate();
  if (!convergence_ok(p, s, b))
    throw SeriesError(std::string(name) + ": p = " + std::to_string(p) + " lies outside the expansion's convergence region");
  detail::GBExpansion e1(gb_log_y(p, s), s, false);
  detail::GBExpansion e2(gb_log_y(p, b), b, false);
  const double lit = beta_shift_first(cfg);
  auto term = [&](int j1, int j2, std::array<LogTerm, 1>& out, LogTerm& bound) {
    e1.ensure(j1);
    e2.ensure(j2);
    const LogTerm a1 = e1.alpha[j1], a2 = e2.alpha[j2];
    const LogTerm ab = e1.alpha_abs[j1] * e2.alpha_abs[j2];
    if (ab.zero()) return;
    const double A1 = s.a * (s.u + j1);
    const double A2 = b.a * (b.u + j2);
    const double lb = checked_log_beta(A1 + moment + lit, A2 + lit, name);
    out[0] = a1 * a2 * LogTerm{lb, 1};
    bound = ab * LogTerm{lb, 1};
  };
  auto r = detail::sum_rectangle<1>(term, 2, cfg, name);
  if (r.sums[0].total().sign <= 0) throw SeriesError(std::string(name) + ": series summed to a nonpositive value");
  const int ext = r.extent;
  const int l = std::min(ext, e1.b1_nonzero), n = std::min(ext, e1.b2_nonzero);
  const int m = std::min(ext, e2.b1_nonzero), rr = std::min(ext, e2.b2_nonzero);
  return finish(r.sums[0], {l, m, n, rr}, 0.0);
}

// t^n int_lo^hi z^n e^(-z^2/2) dz with lo = -(p-mu)/sigma, hi = mu/sigma, t = sigma/(p-mu),
// regenerated on demand with a larger order.
struct GaussianMoments {
  GaussianMoments(double p, const NormalParams& b)
      : lo(-(p - b.mu) / b.sigma), hi(b.mu / b.sigma), t(b.sigma / (p - b.mu)), log_pm(std::log(p - b.mu)) {}
  double at(int n) {
    if (n >= static_cast<int>(g.size()))
      g = scaled_gaussian_moments(static_cast<unsigned>(std::max(2 * n, 256)), lo, hi, t);
    return g[n];
  }
  double lo, hi, t, log_pm;
  std::vector<double> g;
};

// shift = 0 (C7), 1 (C8), 2 (C9): the binomial top is A_j - 1 + shift.
SeriesValue gbnormal_series(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg, int shift,
                            const char* name) {
  require_positive_p(p, name);
  cfg.validate();
  s.validate();
  b.validate();
  if (!(b.mu > 0.0)) throw InvalidParameter(std::string(name) + ": noise mu must be positive");
  if (!convergence_ok(p, s, b))
    throw SeriesError(std::string(name) + ": p = " + std::to_string(p) + " lies outside the expansion's convergence region");
  GaussianMoments gm(p, b);
  detail::GBExpansion e(gb_log_y(p - b.mu, s), s, false);
  std::vector<detail::BinomialRow> rows;
  auto top = [&](int j) { return s.a * (s.u + j) - 1.0 + shift; };
  auto row = [&](int j) -> detail::BinomialRow& {
    while (static_cast<int>(rows.size()) <= j) rows.emplace_back(top(static_cast<int>(rows.size())));
    return rows[j];
  };
  auto term = [&](int j, int n, std::array<LogTerm, 1>& out, LogTerm& bound) {
    e.ensure(j);
    if (e.alpha_abs[j].zero()) return;
    const LogTerm bn = row(j).at(n);
    const LogTerm gn = LogTerm::from(gm.at(n));
    out[0] = e.alpha[j] * bn * gn;
    bound = e.alpha_abs[j] * bn.abs() * gn.abs();
  };
  // binomial terms keep growing until n passes the top
  auto r = detail::sum_nested<1>(term, [&](int j) { return top(j) + 1.0; }, cfg, name);
  if (r.sums[0].total().sign <= 0) throw SeriesError(std::string(name) + ": series summed to a nonpositive value");
  const int ext = r.extent;
  // C7 = sqrt2 ((p-mu)/p)^(au-1) S; C8 carries one more power of (p-mu)/p, C9 two.
  const double log_ratio = gm.log_pm - std::log(p);
  const double log_factor = 0.5 * std::log(2.0) + (s.a * s.u - 1.0 + shift) * log_ratio;
  return finish(r.sums[0], {std::min(ext, e.b1_nonzero), std::min(ext, e.b2_nonzero), r.used[1]}, log_factor);
}

}  // namespace

void SeriesConfig::validate() const {
  if (!(rel_tol > 0.0)) throw InvalidParameter("series: rel_tol must be positive");
  if (max_terms_per_index < 1) throw InvalidParameter("series: max_terms_per_index must be at least 1");
  if (stable_window < 1) throw InvalidParameter("series: stable_window must be at least 1");
  if (!(max_condition >= 1.0)) throw InvalidParameter("series: max_condition must be at least 1");
}

namespace detail {

LogTerm BinomialRow::at(int k) {
  while (static_cast<int>(terms.size()) <= k) {
    const int i = static_cast<int>(terms.size());
    const LogTerm prev = terms.back();
    const double f = r - (i - 1);
    if (prev.zero() || f == 0.0) {
      terms.push_back({});
    } else {
      terms.push_back({prev.log_abs + std::log(std::abs(f)) - std::log(static_cast<double>(i)), prev.sign * (f > 0 ? 1 : -1)});
    }
  }
  return terms[k];
}

LogTerm BinomialDerivRow::at(int k) {
  while (static_cast<int>(terms.size()) <= k) {
    const int i = static_cast<int>(terms.size());
    const double f = r - (i - 1);
    const double nv = vv * f / i;
    const double nd = (dd * f + vv) / i;
    vv = nv;
    dd = nd;
    const double m = std::max(std::abs(vv), std::abs(dd));
    if (m > 0.0) {
      sc += std::log(m);
      vv /= m;
      dd /= m;
    }
    terms.push_back(dd == 0.0 ? LogTerm{} : LogTerm{std::log(std::abs(dd)) + sc, dd > 0 ? 1 : -1});
  }
  return terms[k];
}

GBExpansion::GBExpansion(double log_y, const GBParams& g, bool with_derivatives)
    : log_y(log_y), g(g), derivs(with_derivatives), v_row(g.v - 1.0) {}

void GBExpansion::ensure(int j) {
  const double log_1mc = g.c < 1.0 ? std::log1p(-g.c) : -kInf;
  const double log_c = g.c > 0.0 ? std::log(g.c) : -kInf;
  const double uv = g.u + g.v;
  while (static_cast<int>(b1.size()) <= j) {
    const int l = static_cast<int>(b1.size());
    // b1(l) = (-1)^l binom(v-1, l) ((1-c) y)^l
    LogTerm t;
    if (l == 0) {
      t = {0.0, 1};
    } else if (g.c < 1.0 && !b1.back().zero()) {
      const double f = (g.v - 1.0) - (l - 1);
      if (f != 0.0)
        t = {b1.back().log_abs + std::log(std::abs(f)) - std::log(static_cast<double>(l)) + log_1mc + log_y,
             -b1.back().sign * (f > 0 ? 1 : -1)};
    }
    b1.push_back(t);
    if (!t.zero() && l == b1_nonzero) ++b1_nonzero;
    // b2(n) = (-1)^n binom(u+v+n-1, n) (c y)^n
    LogTerm t2;
    if (l == 0) {
      t2 = {0.0, 1};
    } else if (g.c > 0.0) {
      t2 = {std::lgamma(uv + l) - std::lgamma(uv) - std::lgamma(l + 1.0) + l * (log_c + log_y), l % 2 ? -1 : 1};
    }
    b2.push_back(t2);
    if (!t2.zero() && l == b2_nonzero) ++b2_nonzero;
    if (derivs) {
      const LogTerm bd = v_row.at(l);
      LogTerm tv;
      if (!bd.zero() && (l == 0 || g.c < 1.0))
        tv = {bd.log_abs + (l == 0 ? 0.0 : l * (log_1mc + log_y)), (l % 2 ? -1 : 1) * bd.sign};
      b1_v.push_back(tv);
    }
  }
  while (static_cast<int>(alpha.size()) <= j) {
    const int jj = static_cast<int>(alpha.size());
    LogSum sum, sum_c, sum_u, sum_v;
    // harm[n] = psi(u+v+n) - psi(u+v)
    std::vector<double> harm(jj + 1, 0.0);
    if (derivs)
      for (int n = 1; n <= jj; ++n) harm[n] = harm[n - 1] + 1.0 / (uv + n - 1);
    for (int l = 0; l <= jj; ++l) {
      const int n = jj - l;
      const LogTerm prod = b1[l] * b2[n];
      sum.add(prod);
      if (!derivs) continue;
      if (g.c > 0.0 && g.c < 1.0) sum_c.add(prod * LogTerm::from(-l / (1.0 - g.c) + n / g.c));
      sum_u.add(prod * LogTerm::from(harm[n]));
      sum_v.add(prod * LogTerm::from(harm[n]));
      sum_v.add(b1_v[l] * b2[n]);
    }
    alpha.push_back(sum.total());
    alpha_abs.push_back(sum.abs_total());
    if (derivs) {
      alpha_c.push_back(sum_c.total());
      alpha_u.push_back(sum_u.total());
      alpha_v.push_back(sum_v.total());
    }
  }
}

}  // namespace detail

SeriesValue eval_C1(double p, const ExpParams& e, const LognormalParams& l, const SeriesConfig& cfg) {
  return exp_lognormal_series(p, e, l, cfg, 0, "eval_C1");
}

SeriesValue eval_C2(double p, const ExpParams& e, const LognormalParams& l, const SeriesConfig& cfg) {
  return exp_lognormal_series(p, e, l, cfg, 1, "eval_C2");
}

SeriesValue eval_C3(double p, const GammaParams& g, const LognormalParams& l, const SeriesConfig& cfg) {
  return gamma_lognormal_series(p, g, l, cfg, g.alpha - 1.0, "eval_C3");
}

SeriesValue eval_C4(double p, const GammaParams& g, const LognormalParams& l, const SeriesConfig& cfg) {
  return gamma_lognormal_series(p, g, l, cfg, g.alpha, "eval_C4");
}

SeriesValue eval_C5(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg) {
  return gbgb_series(p, s, b, cfg, 0, "eval_C5");
}

SeriesValue eval_C6(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg) {
  return gbgb_series(p, s, b, cfg, 1, "eval_C6");
}

SeriesValue eval_C7(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg) {
  return gbnormal_series(p, s, b, cfg, 0, "eval_C7");
}

SeriesValue eval_C8(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg) {
  return gbnormal_series(p, s, b, cfg, 1, "eval_C8");
}

SeriesValue eval_C9(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg) {
  return gbnormal_series(p, s, b, cfg, 2, "eval_C9");
}

namespace {

bool gb_expansion_ok(double x, const GBParams& g) {
  const double y = std::exp(gb_log_y(x, g));
  return (1.0 - g.c) * y < 1.0 && g.c * y < 1.0;
}

bool is_integer(double x) { return x == std::floor(x); }

}  // namespace

bool convergence_ok(double p, const GammaParams& g, const LognormalParams& l) {
  if (!(p > 0.0)) return false;
  // The (p - b)^(alpha-1) expansion converges slowly where noise mass sits near p.
  return is_integer(g.alpha) || (std::log(p) - l.mu) / l.sigma >= 4.0;
}

bool convergence_ok(double p, const GBParams& s, const GBParams& b) {
  return p > 0.0 && gb_expansion_ok(p, s) && gb_expansion_ok(p, b);
}

bool convergence_ok(double p, const GBParams& s, const NormalParams& b) {
  if (!(p > 0.0) || !(b.mu > 0.0) || !(p > b.mu)) return false;
  const double pm = p - b.mu;
  // Binomial in sigma z / (p - mu) over z in [-(p-mu)/sigma, mu/sigma]: the upper end
  // needs mu < p - mu; the lower end sits on the radius and is damped by e^(-z^2/2).
  return b.mu < pm && pm / b.sigma >= 6.0 && gb_expansion_ok(p, s);
}

double log_K1(const GBParams& s, const GBParams& b) {
  return std::log(s.a) + std::log(b.a) - s.a * s.u * std::log(s.d) - b.a * b.u * std::log(b.d) - log_beta(s.u, s.v) -
         log_beta(b.u, b.v);
}

double log_K2(double p, const GBParams& s) {
  return std::log(s.a) + (s.a * s.u - 1.0) * std::log(p) - std::log(2.0 * std::sqrt(kPi)) - s.a * s.u * std::log(s.d) -
         log_beta(s.u, s.v);
}

double log_marginal_exp_lognormal(double p, const ExpParams& e, const LognormalParams& l, const SeriesConfig& cfg) {
  return std::log(e.theta) - e.theta * p + eval_C1(p, e, l, cfg).log_abs;
}

double log_marginal_gamma_lognormal(double p, const GammaParams& g, const LognormalParams& l, const SeriesConfig& cfg) {
  return (g.alpha - 1.0) * std::log(p) - p / g.beta - g.alpha * std::log(g.beta) - std::lgamma(g.alpha) +
         eval_C3(p, g, l, cfg).log_abs;
}

double log_marginal_gb(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg) {
  return log_K1(s, b) + (s.a * s.u + b.a * b.u - 1.0) * std::log(p) + eval_C5(p, s, b, cfg).log_abs;
}

double log_marginal_gb_normal(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg) {
  return log_K2(p, s) + eval_C7(p, s, b, cfg).log_abs;
}

double marginal_gb(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg) {
  return std::exp(log_marginal_gb(p, s, b, cfg));
}

double marginal_gb_normal(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg) {
  return std::exp(log_marginal_gb_normal(p, s, b, cfg));
}

}  // namespace bgc

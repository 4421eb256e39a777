#include "bgc/score.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "bgc/error.hpp"
#include "bgc/log_sum.hpp"
#include "bgc/series.hpp"
#include "bgc/specfun.hpp"

namespace bgc {

namespace {

thread_local std::size_t fallback_count = 0;

void require_interior(const GBParams& g, const char* what) {
  if (!(g.c > 0.0 && g.c < 1.0))
    throw DomainError(std::string(what) + ": c must lie strictly inside (0, 1) for the score (got " +
                      std::to_string(g.c) + ")");
}

LogTerm add(LogTerm x, LogTerm y) {
  LogSum s;
  s.add(x);
  s.add(y);
  return s.total();
}

double ratio(const LogSum& num, const LogSum& den) {
  const LogTerm n = num.total();
  return n.zero() ? 0.0 : (n / den.total()).value();
}

// Gradient of ln of the GB density at x, ordered a, c, d, u, v.
std::array<double, 5> gb_log_pdf_gradient(double x, const GBParams& g) {
  const double lx = std::log(x / g.d);
  const double y = std::exp(g.a * lx);
  const double one_minus = 1.0 - (1.0 - g.c) * y;
  if (!(x > 0.0) || !(one_minus > 0.0))
    throw DomainError("score: negative control " + std::to_string(x) + " lies outside the noise support");
  const double one_plus = 1.0 + g.c * y;
  const double bracket = -(g.v - 1.0) * (1.0 - g.c) / one_minus - (g.u + g.v) * g.c / one_plus;
  const double psi_uv = digamma(g.u + g.v);
  return {1.0 / g.a + g.u * lx + bracket * y * lx,
          (g.v - 1.0) * y / one_minus - (g.u + g.v) * y / one_plus,
          -g.a * g.u / g.d - bracket * g.a * y / g.d,
          g.a * lx - digamma(g.u) + psi_uv - std::log(one_plus),
          std::log(one_minus) - digamma(g.v) + psi_uv - std::log(one_plus)};
}

// ln a - a u ln d - ln B(u, v) + a u ln x, differentiated; c is absent.
std::array<double, 5> gb_prefactor_gradient(double log_x, const GBParams& g) {
  const double psi_uv = digamma(g.u + g.v);
  const double ld = std::log(g.d);
  return {1.0 / g.a - g.u * ld + g.u * log_x, 0.0, -g.a * g.u / g.d,
          -g.a * ld - digamma(g.u) + psi_uv + g.a * log_x, -digamma(g.v) + psi_uv};
}

std::vector<double> gb_vector(const GBParams& g) { return {g.a, g.c, g.d, g.u, g.v}; }
GBParams gb_from(const std::vector<double>& v, std::size_t o) { return {v[o], v[o + 1], v[o + 2], v[o + 3], v[o + 4]}; }

// Central differences of the gene's log marginal in the given coordinates.
std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                const std::vector<bool>& unit_interval) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    double h = 1e-5 * std::max(std::abs(xi), 1e-3);
    if (unit_interval[i]) h = 1e-5 * std::min(xi, 1.0 - xi);
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
    if (!std::isfinite(g[i]))
      throw NumericError("score: finite-difference gradient is not finite");
  }
  return g;
}

// Signal (a, c, d, u, v) then noise (a, c, d, u, v) for one gene.
std::array<double, 10> gbgb_gene(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg) {
  if (!convergence_ok(p, s, b)) throw SeriesError("score_gb: p outside the series region");
  detail::GBExpansion e1(s.a * std::log(p / s.d), s, true);
  detail::GBExpansion e2(b.a * std::log(p / b.d), b, true);
  const double l1 = std::log(p / s.d), l2 = std::log(p / b.d);
  auto term = [&](int j1, int j2, std::array<LogTerm, 11>& out, LogTerm& bound) {
    e1.ensure(j1);
    e2.ensure(j2);
    const double A1 = s.a * (s.u + j1), A2 = b.a * (b.u + j2);
    const LogTerm beta{log_beta(A1, A2), 1};
    const double psi12 = digamma(A1 + A2);
    const double psi1 = digamma(A1) - psi12, psi2 = digamma(A2) - psi12;
    const LogTerm a1 = e1.alpha[j1], a2 = e2.alpha[j2];
    const LogTerm t = a1 * a2 * beta;
    out[0] = t;
    bound = e1.alpha_abs[j1] * e2.alpha_abs[j2] * beta;
    out[1] = t * LogTerm::from(j1 * l1 + psi1 * (s.u + j1));
    out[2] = e1.alpha_c[j1] * a2 * beta;
    out[3] = t * LogTerm::from(-s.a * j1 / s.d);
    out[4] = add(e1.alpha_u[j1] * a2 * beta, t * LogTerm::from(psi1 * s.a));
    out[5] = e1.alpha_v[j1] * a2 * beta;
    out[6] = t * LogTerm::from(j2 * l2 + psi2 * (b.u + j2));
    out[7] = a1 * e2.alpha_c[j2] * beta;
    out[8] = t * LogTerm::from(-b.a * j2 / b.d);
    out[9] = add(a1 * e2.alpha_u[j2] * beta, t * LogTerm::from(psi2 * b.a));
    out[10] = a1 * e2.alpha_v[j2] * beta;
  };
  const auto r = detail::sum_rectangle<11>(term, 2, cfg, "score_gb");
  if (r.sums[0].total().sign <= 0) throw SeriesError("score_gb: series summed to a nonpositive value");
  const double lp = std::log(p);
  const auto k1 = gb_prefactor_gradient(lp, s);
  const auto k2 = gb_prefactor_gradient(lp, b);
  std::array<double, 10> g{};
  for (int i = 0; i < 5; ++i) {
    g[i] = k1[i] + ratio(r.sums[1 + i], r.sums[0]);
    g[5 + i] = k2[i] + ratio(r.sums[6 + i], r.sums[0]);
  }
  return g;
}

// t^n int_lo^hi z^n e^(-z^2/2) dz, regenerated with a larger order on demand.
struct Moments {
  Moments(double p, const NormalParams& b) : lo(-(p - b.mu) / b.sigma), hi(b.mu / b.sigma), t(b.sigma / (p - b.mu)) {}
  double at(int n) {
    if (n >= static_cast<int>(g.size()))
      g = scaled_gaussian_moments(static_cast<unsigned>(std::max(2 * n, 256)), lo, hi, t);
    return g[n];
  }
  double lo, hi, t;
  std::vector<double> g;
};

// mu, sigma, a, c, d, u, v for one gene.
std::array<double, 7> gbnormal_gene(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg) {
  if (!convergence_ok(p, s, b)) throw SeriesError("score_gb_normal: p outside the series region");
  const double pm = p - b.mu;
  const double lpm = std::log(pm / s.d);
  Moments gm(p, b);
  detail::GBExpansion e(s.a * lpm, s, true);
  std::vector<detail::BinomialRow> rows;
  std::vector<detail::BinomialDerivRow> drows;
  auto top = [&](int j) { return s.a * (s.u + j) - 1.0; };
  auto grow = [&](int j) {
    while (static_cast<int>(rows.size()) <= j) {
      rows.emplace_back(top(static_cast<int>(rows.size())));
      drows.emplace_back(top(static_cast<int>(drows.size())));
    }
  };
  auto term = [&](int j, int n, std::array<LogTerm, 6>& out, LogTerm& bound) {
    e.ensure(j);
    grow(j);
    const LogTerm bn = rows[j].at(n), dbn = drows[j].at(n);
    const LogTerm g = LogTerm::from(gm.at(n));
    const LogTerm al = e.alpha[j];
    const LogTerm t = al * bn * g;
    out[0] = t;
    bound = e.alpha_abs[j] * bn.abs() * g.abs();
    out[1] = add(t * LogTerm::from(j * lpm), al * dbn * g * LogTerm::from(s.u + j));
    out[2] = e.alpha_c[j] * bn * g;
    out[3] = t * LogTerm::from(-s.a * j / s.d);
    out[4] = add(e.alpha_u[j] * bn * g, al * dbn * g * LogTerm::from(s.a));
    out[5] = e.alpha_v[j] * bn * g;
  };
  const auto r = detail::sum_nested<6>(term, [&](int j) { return top(j) + 1.0; }, cfg, "score_gb_normal");
  if (r.sums[0].total().sign <= 0) throw SeriesError("score_gb_normal: series summed to a nonpositive value");
  const auto k = gb_prefactor_gradient(std::log(pm), s);
  std::array<double, 7> g{};
  for (int i = 0; i < 5; ++i) g[2 + i] = k[i] + ratio(r.sums[1 + i], r.sums[0]);
  // Noise block through the posterior of b = p - S.
  const SeriesValue c7 = eval_C7(p, s, b, cfg), c8 = eval_C8(p, s, b, cfg), c9 = eval_C9(p, s, b, cfg);
  const double es = p * c8.sign * std::exp(c8.log_abs - c7.log_abs);
  const double es2 = p * p * c9.sign * std::exp(c9.log_abs - c7.log_abs);
  const double sg = b.sigma;
  g[0] = (pm - es) / (sg * sg);
  g[1] = (pm * pm - 2.0 * pm * es + es2) / (sg * sg * sg) - 1.0 / sg;
  return g;
}

}  // namespace

std::size_t last_score_fallbacks() { return fallback_count; }

std::vector<double> score_gb(const GBGB& m, const EstimationProblem& pr) {
  validate(ModelSpec{m});
  require_interior(m.signal, "score_gb");
  require_interior(m.noise, "score_gb");
  pr.cfg.validate();
  fallback_count = 0;
  std::vector<double> total(10, 0.0);  // internal order: signal block then noise block
  for (double p : pr.observed) {
    std::array<double, 10> g{};
    try {
      g = gbgb_gene(p, m.signal, m.noise, pr.cfg.series);
    } catch (const SeriesError&) {
      if (!pr.cfg.fallback) throw;
      ++fallback_count;
      auto x = gb_vector(m.signal);
      const auto xn = gb_vector(m.noise);
      x.insert(x.end(), xn.begin(), xn.end());
      const std::vector<bool> unit = {false, true, false, false, false, false, true, false, false, false};
      const auto f = [&](const std::vector<double>& v) {
        return log_marginal(p, GBGB{gb_from(v, 0), gb_from(v, 5)}, pr.cfg).value;
      };
      const auto fd = fd_gradient(f, x, unit);
      std::copy(fd.begin(), fd.end(), g.begin());
    }
    for (int i = 0; i < 10; ++i) total[i] += g[i];
  }
  for (double x : pr.negatives) {
    const auto g = gb_log_pdf_gradient(x, m.noise);
    for (int i = 0; i < 5; ++i) total[5 + i] += g[i];
  }
  std::vector<double> out(total.begin() + 5, total.end());
  out.insert(out.end(), total.begin(), total.begin() + 5);
  return out;
}

std::vector<double> score_gb_normal(const GBNormal& m, const EstimationProblem& pr) {
  validate(ModelSpec{m});
  require_interior(m.signal, "score_gb_normal");
  pr.cfg.validate();
  fallback_count = 0;
  std::vector<double> total(7, 0.0);
  for (double p : pr.observed) {
    std::array<double, 7> g{};
    try {
      g = gbnormal_gene(p, m.signal, m.noise, pr.cfg.series);
    } catch (const SeriesError&) {
      if (!pr.cfg.fallback) throw;
      ++fallback_count;
      auto x = std::vector<double>{m.noise.mu, m.noise.sigma};
      const auto xs = gb_vector(m.signal);
      x.insert(x.end(), xs.begin(), xs.end());
      const std::vector<bool> unit = {false, false, false, true, false, false, false};
      const auto f = [&](const std::vector<double>& v) {
        return log_marginal(p, GBNormal{gb_from(v, 2), {v[0], v[1]}}, pr.cfg).value;
      };
      const auto fd = fd_gradient(f, x, unit);
      std::copy(fd.begin(), fd.end(), g.begin());
    }
    for (int i = 0; i < 7; ++i) total[i] += g[i];
  }
  const double mu = m.noise.mu, sg = m.noise.sigma;
  for (double x : pr.negatives) {
    const double z = (x - mu) / sg;
    total[0] += z / sg;
    total[1] += (z * z - 1.0) / sg;
  }
  return total;
}

}  // namespace bgc

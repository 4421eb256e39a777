#include <cmath>
#include <random>

#include "bgc/error.hpp"
#include "bgc/oracle.hpp"
#include "bgc/series.hpp"
#include "bgc/specfun.hpp"
#include "doctest.h"
#include "draws.hpp"

using namespace bgc;

namespace {

double log_phi_direct(double z) { return std::log(0.5 * std::erfc(-z / std::sqrt(2.0))); }

// Plain high-order reference sums, written straight from the printed formulas.
double c1_reference(double p, double theta, double mu, double sigma, int terms, int shift) {
  double sum = 0.0;
  for (int k = 0; k < terms; ++k) {
    const int j = k + shift;
    const double lp = log_phi_direct((std::log(p) - mu - j * sigma * sigma) / sigma);
    if (!std::isfinite(lp)) continue;
    sum += std::exp(k * std::log(theta) - std::lgamma(k + 1.0) + j * mu + 0.5 * j * j * sigma * sigma + lp -
                    shift * (mu + 0.5 * sigma * sigma));
  }
  return sum;
}

double c3_reference(double p, double alpha, double beta, double mu, double sigma, int terms, double top) {
  double sum = 0.0;
  for (int k = 0; k < terms; ++k) {
    const double binom = gen_binomial(top, static_cast<std::size_t>(k));
    if (binom == 0.0) continue;
    for (int n = 0; n < terms; ++n) {
      const int j = k + n;
      const double lp = log_phi_direct((std::log(p) - mu - j * sigma * sigma) / sigma);
      if (!std::isfinite(lp)) continue;
      const double mag = std::log(std::abs(binom)) + j * mu + 0.5 * j * j * sigma * sigma + lp - k * std::log(p) -
                         n * std::log(beta) - std::lgamma(n + 1.0);
      sum += (k % 2 ? -1.0 : 1.0) * (binom > 0 ? 1.0 : -1.0) * std::exp(mag);
    }
  }
  return sum;
}

}  // namespace

TEST_CASE("C1 and C2") {
  const LognormalParams l{0, 0.5};
  const auto c1_zero = eval_C1(10, {0.0}, l);
  CHECK(c1_zero.value == doctest::Approx(std_normal_cdf(std::log(10.0) / 0.5)).epsilon(1e-14));
  CHECK(c1_zero.terms_used[0] == 1);
  const auto c2_zero = eval_C2(10, {0.0}, l);
  CHECK(c2_zero.value == doctest::Approx(std_normal_cdf((std::log(10.0) - 0.25) / 0.5)).epsilon(1e-14));

  const auto c1 = eval_C1(10, {0.1}, l);
  CHECK(c1.converged);
  CHECK(c1.terms_used[0] <= 60);
  CHECK(std::abs(c1.value / c1_reference(10, 0.1, 0, 0.5, 500, 0) - 1.0) <= 1e-10);
  const auto c2 = eval_C2(10, {0.1}, l);
  CHECK(std::abs(c2.value / c1_reference(10, 0.1, 0, 0.5, 500, 1) - 1.0) <= 1e-10);
}

TEST_CASE("C3 and C4") {
  const LognormalParams l{0, 0.4};
  // alpha = 1: only the k = 0 row survives and C3 equals C1 at theta = 1/beta
  const auto c3 = eval_C3(20, {1.0, 2.0}, l);
  CHECK(c3.terms_used[0] == 1);
  CHECK(std::abs(c3.value / eval_C1(20, {0.5}, l).value - 1.0) <= 1e-9);
  // alpha = 2: C4's binomial (2 choose k) ends at k = 2
  CHECK(eval_C4(20, {2.0, 2.0}, l).terms_used[0] <= 3);

  const double ref3 = c3_reference(20, 1.5, 2, 0, 0.4, 400, 0.5);
  const double ref4 = c3_reference(20, 1.5, 2, 0, 0.4, 400, 1.5);
  CHECK(std::abs(eval_C3(20, {1.5, 2}, l).value / ref3 - 1.0) <= 1e-8);
  CHECK(std::abs(eval_C4(20, {1.5, 2}, l).value / ref4 - 1.0) <= 1e-8);
}

TEST_CASE("exp-gamma nesting of C3/C4 into C1/C2") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const double beta = testing::log_uniform(rng, 2, 50);
    const LognormalParams l{testing::uniform(rng, 0, 3), testing::uniform(rng, 0.1, 0.6)};
    const double p = std::exp(l.mu + 4 * l.sigma) * testing::uniform(rng, 1.0, 5.0);
    CHECK(std::abs(eval_C3(p, {1, beta}, l).value / eval_C1(p, {1 / beta}, l).value - 1.0) <= 1e-9);
    // p C4/C3 = p - e^(mu + sigma^2/2) C2/C1 at alpha = 1
    const double lhs = p * eval_C4(p, {1, beta}, l).value / eval_C3(p, {1, beta}, l).value;
    const double rhs = p - std::exp(l.mu + 0.5 * l.sigma * l.sigma) * eval_C2(p, {1 / beta}, l).value /
                               eval_C1(p, {1 / beta}, l).value;
    CHECK(std::abs(lhs / rhs - 1.0) <= 1e-9);
  }
}

TEST_CASE("C5 and C6 on two uniforms") {
  const GBParams u{1, 0, 1, 1, 1};
  const auto c5 = eval_C5(0.5, u, u);
  CHECK(c5.value == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(marginal_gb(0.5, u, u) == doctest::Approx(0.5).epsilon(1e-14));
  const auto c6 = eval_C6(0.5, u, u);
  CHECK(c6.value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(0.5 * c6.value / c5.value == doctest::Approx(0.25).epsilon(1e-14));
  SeriesConfig literal;
  literal.beta_args = BetaArgs::paper_literal;
  CHECK_THROWS_AS(eval_C5(0.5, u, u, literal), DomainError);
}

TEST_CASE("C5 against the quadrature oracle") {
  const GBParams s{1, 0.5, 1, 2, 3}, b{1, 0.5, 1, 1, 2};
  const double oracle = marginal_pdf_quadrature(0.8, GBGB{s, b});
  CHECK(std::abs(marginal_gb(0.8, s, b) / oracle - 1.0) <= 1e-4);
  // the printed beta arguments give a different number
  SeriesConfig literal;
  literal.beta_args = BetaArgs::paper_literal;
  const GBParams s2{1, 0.5, 1, 3, 3}, b2{1, 0.5, 1, 2, 2};
  const double lit = std::exp(log_K1(s2, b2) + (3 + 2 - 1) * std::log(0.8) + eval_C5(0.8, s2, b2, literal).log_abs);
  CHECK(std::abs(lit / marginal_pdf_quadrature(0.8, GBGB{s2, b2}) - 1.0) > 1e-2);
}

TEST_CASE("degenerate c collapses the quadruple sum") {
  const GBParams first{1.3, 0.0, 2, 1.5, 2.5}, second{0.9, 1.0, 3, 2, 3};
  const auto v = eval_C5(0.7, first, second);
  // index order l, m, n, r: (1-c1)^l, (1-c2)^m, c1^n, c2^r
  CHECK(v.terms_used[2] == 1);
  CHECK(v.terms_used[1] == 1);
  CHECK(v.terms_used[0] > 1);
  CHECK(v.terms_used[3] > 1);
  const auto w = eval_C7(60, GBParams{1.1, 1.0, 80, 2, 3}, NormalParams{20, 4});
  CHECK(w.terms_used[0] == 1);
  CHECK(w.terms_used[1] > 1);
}

TEST_CASE("C7 and C8") {
  const GBParams u{1, 0, 1, 1, 1};
  const NormalParams tight{0.25, 0.02};
  const auto c7 = eval_C7(0.75, u, tight);
  const auto c8 = eval_C8(0.75, u, tight);
  CHECK(std::abs(0.75 * c8.value / c7.value - 0.5) <= 1e-3);
  CHECK(c7.terms_used[2] == 1);
  CHECK(c8.terms_used[2] == 2);
  CHECK(marginal_gb_normal(0.75, u, tight) == doctest::Approx(1.0).epsilon(1e-6));
  // mu = 1, sigma = 0.3, p = 4: c (p/d)^a = 2 lies outside the expansion radius
  CHECK_FALSE(convergence_ok(4.0, GBParams{1, 1, 2, 1.5, 2}, NormalParams{1, 0.3}));
  CHECK_THROWS_AS(eval_C7(4.0, GBParams{1, 1, 2, 1.5, 2}, NormalParams{1, 0.3}), SeriesError);
}

TEST_CASE("series agree with the oracle on safe-range draws") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const auto d = testing::draw_gbgb(rng);
    const double series = marginal_gb(d.p, d.model.signal, d.model.noise);
    const double oracle = marginal_pdf_quadrature(d.p, d.model);
    CAPTURE(i);
    CHECK(std::abs(series / oracle - 1.0) <= 1e-3);
  }
  for (int i = 0; i < 100; ++i) {
    const auto d = testing::draw_gbnormal(rng);
    const double series = marginal_gb_normal(d.p, d.model.signal, d.model.noise);
    const double oracle = marginal_pdf_quadrature(d.p, d.model);
    CAPTURE(i);
    CHECK(std::abs(series / oracle - 1.0) <= 1e-3);
  }
}

TEST_CASE("doubling the term cap leaves converged values in place") {
  SeriesConfig base;
  SeriesConfig wide = base;
  wide.max_terms_per_index *= 2;
  std::mt19937_64 rng(77);
  for (int i = 0; i < 10; ++i) {
    const auto g = testing::draw_gbgb(rng);
    const double a = eval_C5(g.p, g.model.signal, g.model.noise, base).value;
    const double b = eval_C5(g.p, g.model.signal, g.model.noise, wide).value;
    CHECK(std::abs(a / b - 1.0) <= base.rel_tol * 10);
    const auto n = testing::draw_gbnormal(rng);
    const double c = eval_C7(n.p, n.model.signal, n.model.noise, base).value;
    const double e = eval_C7(n.p, n.model.signal, n.model.noise, wide).value;
    CHECK(std::abs(c / e - 1.0) <= base.rel_tol * 10);
  }
}

TEST_CASE("series configuration is validated") {
  SeriesConfig bad;
  bad.rel_tol = 0;
  CHECK_THROWS_AS(eval_C1(1, {0.1}, {0, 1}, bad), InvalidParameter);
  SeriesConfig tiny;
  tiny.max_terms_per_index = 2;
  CHECK_THROWS_AS(eval_C1(100, {0.5}, {0, 1}, tiny), SeriesError);
}

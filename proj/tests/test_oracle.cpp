#include <cmath>
#include <random>
#include <span>

#include "bgc/oracle.hpp"
#include "bgc/specfun.hpp"
#include "doctest.h"

using namespace bgc;

namespace {

// Exp-normal marginal with the signal integrated over (0, p).
double exp_normal_marginal(double p, double theta, double mu, double sigma) {
  const double m = p - mu - sigma * sigma * theta;
  const double a = m / sigma, b = (mu + sigma * sigma * theta) / sigma;
  return theta * std::exp(0.5 * theta * theta * sigma * sigma - theta * (p - mu)) *
         (std_normal_cdf(a) + std_normal_cdf(b) - 1.0);
}

}  // namespace

TEST_CASE("uniform plus uniform") {
  const ModelSpec m = GBGB{{1, 0, 1, 1, 1}, {1, 0, 1, 1, 1}};
  CHECK(marginal_pdf_quadrature(0.5, m) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(marginal_pdf_quadrature(1.5, m) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(posterior_mean_quadrature(0.5, m) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(marginal_pdf_quadrature(2.5, m) == 0.0);
  CHECK_THROWS(posterior_mean_quadrature(2.5, m));
}

TEST_CASE("exp-normal marginal matches its closed form") {
  const ModelSpec m = ExpNormal{{0.01}, {100, 15}};
  CHECK(marginal_pdf_quadrature(250, m) == doctest::Approx(exp_normal_marginal(250, 0.01, 100, 15)).epsilon(1e-8));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(20, 800);
  for (int i = 0; i < 50; ++i) {
    const double p = u(rng);
    CHECK(marginal_pdf_quadrature(p, m) == doctest::Approx(exp_normal_marginal(p, 0.01, 100, 15)).epsilon(1e-8));
  }
}

TEST_CASE("posterior mean stays inside the signal support") {
  const ModelSpec m = GBGB{{1, 0.5, 1, 2, 3}, {1, 0.5, 1, 1, 2}};
  for (double p : {0.1, 0.8, 1.5, 2.5}) {
    const double e = posterior_mean_quadrature(p, m);
    CHECK(e > 0.0);
    CHECK(e <= std::min(p, 2.0));
  }
}

TEST_CASE("tightening tolerances moves results by less than the error estimate") {
  const ModelSpec models[] = {ModelSpec{GammaNormal{{2, 50}, {100, 15}}}, ModelSpec{ExpLognormal{{0.05}, {1, 0.6}}},
                              ModelSpec{GBNormal{{1, 1, 2, 1.5, 2}, {1, 0.3}}}};
  for (const auto& m : models) {
    QuadConfig loose;
    loose.rel_tol = 1e-6;
    QuadConfig tight;
    tight.rel_tol = 1e-12;
    tight.max_subdivisions = 20000;
    const auto a = integrate_convolution(40.0, m, loose);
    const auto b = integrate_convolution(40.0, m, tight);
    CHECK(std::abs(a.posterior_mean / b.posterior_mean - 1.0) <= std::max(a.rel_error * 2, 1e-12));
  }
}

TEST_CASE("marginals integrate to one") {
  const ModelSpec models[] = {
      ModelSpec{ExpNormal{{0.02}, {100, 15}, ExpNormalBound::unbounded}},
      ModelSpec{ExpGamma{{0.05}, {2, 4}}},
      ModelSpec{GammaNormal{{2, 50}, {100, 15}}},
      ModelSpec{ExpLognormal{{0.05}, {1, 0.6}}},
      ModelSpec{GammaLognormal{{2, 10}, {0.5, 0.4}}},
      ModelSpec{GBGB{{1, 0.5, 1, 2, 3}, {1, 0.5, 1, 1, 2}}},
  };
  for (const auto& m : models) {
    std::vector<double> knots{0.0};
    for (double x : landmarks(signal_of(m))) knots.push_back(x);
    for (double x : landmarks(noise_of(m)))
      if (x > 0) knots.push_back(x);
    std::sort(knots.begin(), knots.end());
    knots.push_back(std::numeric_limits<double>::infinity());
    if (std::holds_alternative<NormalParams>(noise_of(m))) knots.front() = -std::numeric_limits<double>::infinity();
    QuadConfig inner;
    inner.rel_tol = 1e-10;
    inner.max_subdivisions = 20000;
    QuadConfig outer;
    outer.rel_tol = 1e-8;
    outer.abs_tol = 1e-9;
    outer.max_subdivisions = 20000;
    CAPTURE(m.index());
    const double mass = integrate_scalar([&](double p) { return marginal_pdf_quadrature(p, m, inner); },
                                         std::span<const double>(knots), outer);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("narrow peak at the edge of an unbounded range") {
  // noise centred far above p: the posterior of s hugs zero with width ~ sigma / 25
  for (double z : {-10.0, -18.0, -24.7, -30.0}) {
    const double sigma = 0.17, theta = 0.0013, p = 0.58;
    const double mu = p - z * sigma - sigma * sigma * theta;
    const ModelSpec m = ExpNormal{{theta}, {mu, sigma}, ExpNormalBound::unbounded};
    // normal(z sigma, sigma) truncated to (0, inf), in long double
    const long double zl = z;
    const long double phi = std::exp(-0.5L * zl * zl) / std::sqrt(2.0L * 3.14159265358979323846L);
    const long double cdf = 0.5L * std::erfc(-zl / std::sqrt(2.0L));
    const double ref = static_cast<double>(sigma * (zl + phi / cdf));
    CAPTURE(z);
    CHECK(std::abs(posterior_mean_quadrature(p, m) / ref - 1.0) <= 1e-7);
  }
}

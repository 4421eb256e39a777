#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "bgc/error.hpp"
#include "bgc/model_io.hpp"
#include "bgc/optimize.hpp"
#include "bgc/oracle.hpp"
#include "bgc/score.hpp"
#include "doctest.h"
#include "draws.hpp"

using namespace bgc;
using testing::uniform;

namespace {

QuadConfig tight() {
  QuadConfig q;
  q.rel_tol = 1e-13;
  q.abs_tol = 1e-300;
  q.max_subdivisions = 20000;
  return q;
}

// Log-likelihood built only from quadrature marginals and the noise density.
double oracle_loglik(const ModelSpec& m, const EstimationProblem& pr) {
  double s = 0.0;
  for (double p : pr.observed) s += log_marginal_pdf_quadrature(p, m, tight());
  const Dist b = noise_of(m);
  for (double x : pr.negatives) s += log_pdf(x, b);
  return s;
}

// Central difference of the oracle in coordinate i of param_values order.
double fd(ModelKind kind, const std::vector<double>& v, std::size_t i, const EstimationProblem& pr) {
  auto vp = v, vm = v;
  const double h = 1e-6 * std::abs(v[i]);
  vp[i] += h;
  vm[i] -= h;
  return (oracle_loglik(from_values(kind, vp), pr) - oracle_loglik(from_values(kind, vm), pr)) / (2 * h);
}

int mismatches(ModelKind kind, const ModelSpec& m, const EstimationProblem& pr) {
  const auto g = score_in_param_order(m, pr);
  const auto v = param_values(m);
  int bad = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = fd(kind, v, i, pr);
    if (std::abs(f - g[i]) > std::max(1e-4, 1e-3 * std::abs(f))) {
      ++bad;
      MESSAGE(format_model(m) << " coordinate " << i << ": analytic " << g[i] << " fd " << f);
    }
  }
  return bad;
}

}  // namespace

TEST_CASE("gbgb score against finite differences of the quadrature likelihood") {
  std::mt19937_64 rng(7);
  int bad = 0;
  for (int t = 0; t < 20; ++t) {
    const auto d = testing::draw_gbgb(rng);
    EstimationProblem pr;
    pr.kind = ModelKind::gbgb;
    pr.cfg.series.rel_tol = 1e-14;
    for (int i = 0; i < 3; ++i) pr.observed.push_back(d.p * uniform(rng, 0.5, 1.0));
    pr.negatives = sample(Dist{d.model.noise}, 4, 11 + t);
    bad += mismatches(pr.kind, d.model, pr);
  }
  CHECK(bad == 0);
}

TEST_CASE("gb-normal score against finite differences of the quadrature likelihood") {
  std::mt19937_64 rng(8);
  int bad = 0;
  for (int t = 0; t < 20; ++t) {
    const auto d = testing::draw_gbnormal(rng);
    EstimationProblem pr;
    pr.kind = ModelKind::gbnormal;
    pr.cfg.series.rel_tol = 1e-14;
    for (int i = 0; i < 3; ++i) pr.observed.push_back(d.p * uniform(rng, 0.9, 1.0));
    for (int i = 0; i < 4; ++i) pr.negatives.push_back(d.model.noise.mu + d.model.noise.sigma * uniform(rng, -1, 1));
    bad += mismatches(pr.kind, d.model, pr);
  }
  CHECK(bad == 0);
}

TEST_CASE("signal block comes from the regular genes alone") {
  // A problem needs at least one gene, so compare one copy of a gene with two.
  const GBGB m{{1.5, 0.5, 2, 2, 3}, {1.2, 0.5, 1.5, 2, 3}};
  EstimationProblem one, two;
  one.kind = two.kind = ModelKind::gbgb;
  one.observed = {1.0};
  two.observed = {1.0, 1.0};
  one.negatives = two.negatives = sample(Dist{m.noise}, 50, 3);
  const auto g1 = score_gb(m, one), g2 = score_gb(m, two);
  // the noise-only likelihood adds nothing to the signal block
  for (int k = 5; k < 10; ++k) CHECK(g2[k] == doctest::Approx(2 * g1[k]).epsilon(1e-12));
}

TEST_CASE("gb-normal mu and sigma zeros at the control moments") {
  const GBNormal m0{{1.5, 0.5, 40, 2, 3}, {10, 2}};
  EstimationProblem pr;
  pr.kind = ModelKind::gbnormal;
  pr.observed = {60.0};
  pr.negatives = sample(Dist{NormalParams{20, 3}}, 200, 5);
  const double n = static_cast<double>(pr.negatives.size());
  const double mean = std::accumulate(pr.negatives.begin(), pr.negatives.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : pr.negatives) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);

  // the regular gene moves the joint optimum, so take the controls' share:
  // the score minus the score of the same problem without controls
  GBNormal m = m0;
  m.noise = {mean, sd};
  EstimationProblem genes_only = pr;
  genes_only.negatives.clear();
  const auto full = score_gb_normal(m, pr);
  const auto g0 = score_gb_normal(m, genes_only);
  CHECK(std::abs(full[0] - g0[0]) <= 1e-10);
  CHECK(std::abs(full[1] - g0[1]) <= 1e-10);
}

TEST_CASE("boundary c is rejected") {
  EstimationProblem pr;
  pr.kind = ModelKind::gbgb;
  pr.observed = {1.0};
  pr.negatives = {0.5, 0.7};
  for (double c : {0.0, 1.0}) {
    GBGB m{{1.5, c, 2, 2, 3}, {1.2, 0.5, 1.5, 2, 3}};
    CHECK_THROWS_AS(score_gb(m, pr), DomainError);
    std::swap(m.signal, m.noise);
    CHECK_THROWS_AS(score_gb(m, pr), DomainError);
  }
  EstimationProblem pn;
  pn.kind = ModelKind::gbnormal;
  pn.observed = {60.0};
  pn.negatives = {20.0, 21.0};
  CHECK_THROWS_AS(score_gb_normal(GBNormal{{1.5, 1.0, 40, 2, 3}, {20, 3}}, pn), DomainError);
}

TEST_CASE("genes outside the series region fall back to differences of the quadrature marginal") {
  const GBGB m{{1.5, 0.5, 2, 2, 3}, {1.2, 0.5, 1.5, 2, 3}};
  EstimationProblem pr;
  pr.kind = ModelKind::gbgb;
  pr.observed = {0.8, 3.5};  // the second is beyond both radii
  pr.negatives = sample(Dist{m.noise}, 5, 9);
  CHECK(mismatches(pr.kind, m, pr) == 0);
  CHECK(last_score_fallbacks() == 1);
}

TEST_CASE("score vanishes at a simplex maximum of the noise block") {
  // Signal fixed at the truth with a single gene; the noise parameters are
  // well determined by the controls, so the simplex finds an interior point.
  const GBParams signal{1.5, 0.5, 2, 2, 3};
  const GBParams noise{1.2, 0.5, 1.5, 2, 3};
  EstimationProblem pr;
  pr.kind = ModelKind::gbgb;
  pr.observed = {1.0};
  pr.negatives = sample(Dist{noise}, 2000, 21);
  auto model = [&](const std::vector<double>& y) {
    const double c = 1.0 / (1.0 + std::exp(-y[1]));
    return GBGB{signal, {std::exp(y[0]), c, std::exp(y[2]), std::exp(y[3]), std::exp(y[4])}};
  };
  auto f = [&](const std::vector<double>& y) { return -loglik(ModelSpec{model(y)}, pr); };
  NelderMeadConfig nm;
  nm.max_evaluations = 20000;
  nm.f_tol = 1e-14;
  nm.x_tol = 1e-10;
  const std::vector<double> y0{std::log(1.2), 0.0, std::log(1.5), std::log(2.0), std::log(3.0)};
  const auto r = nelder_mead(f, y0, nm);
  REQUIRE(r.converged);
  const auto g = score_gb(model(r.x), pr);
  double norm = 0.0;
  for (int k = 0; k < 5; ++k) norm += g[k] * g[k];
  CHECK(std::sqrt(norm) < 1e-2);
}

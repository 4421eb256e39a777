#include "bgc/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgc/error.hpp"
#include "bgc/oracle.hpp"

namespace bgc {

namespace {

double unif(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
double log_unif(std::mt19937_64& rng, double lo, double hi) { return std::exp(unif(rng, std::log(lo), std::log(hi))); }

GBParams random_gb(std::mt19937_64& rng, double d_lo, double d_hi) {
  return {unif(rng, 0.7, 2.5), unif(rng, 0.1, 0.9), unif(rng, d_lo, d_hi), unif(rng, 1.0, 4.0), unif(rng, 1.2, 5.0)};
}

// x where the larger expansion ratio max(c, 1-c) (x/d)^a reaches rho
double gb_radius(const GBParams& g, double rho) { return g.d * std::pow(rho / std::max(g.c, 1.0 - g.c), 1.0 / g.a); }

}  // namespace

ValidationCase draw_validation_case(ModelKind kind, std::mt19937_64& rng) {
  ValidationCase c;
  switch (kind) {
    case ModelKind::rma:
    case ModelKind::mbcb: {
      const ExpParams e{log_unif(rng, 1e-3, 0.1)};
      const NormalParams b{unif(rng, 50, 200), log_unif(rng, 1, 50)};
      c.model = ExpNormal{e, b, kind == ModelKind::rma ? ExpNormalBound::observed : ExpNormalBound::unbounded};
      c.p = std::max(b.mu + unif(rng, -2, 5) * b.sigma + unif(rng, 0, 3) / e.theta, 1.0);
      break;
    }
    case ModelKind::exp_gamma: {
      const ExpParams e{log_unif(rng, 1e-3, 0.1)};
      const GammaParams g{unif(rng, 0.5, 5), log_unif(rng, 1, 50)};
      c.model = ExpGamma{e, g};
      c.p = g.alpha * g.beta * unif(rng, 0.2, 3) + unif(rng, 0, 3) / e.theta;
      break;
    }
    case ModelKind::gamma_normal: {
      const GammaParams g{log_unif(rng, 0.5, 10), log_unif(rng, 5, 100)};
      const NormalParams b{unif(rng, 50, 200), log_unif(rng, 2, 30)};
      c.model = GammaNormal{g, b};
      c.p = b.mu + unif(rng, 0, 5) * g.alpha * g.beta;
      break;
    }
    case ModelKind::exp_lognormal: {
      const LognormalParams l{unif(rng, -1, 4), unif(rng, 0.1, 1)};
      c.model = ExpLognormal{{log_unif(rng, 1e-3, 1)}, l};
      c.p = std::exp(l.mu - 2.33 * l.sigma) * log_unif(rng, 1, 100);
      break;
    }
    case ModelKind::gamma_lognormal: {
      const LognormalParams l{unif(rng, 0, 3), unif(rng, 0.1, 0.6)};
      c.model = GammaLognormal{{unif(rng, 0.5, 5), log_unif(rng, 2, 50)}, l};
      c.p = std::exp(l.mu + 4 * l.sigma) * unif(rng, 1, 5);
      break;
    }
    case ModelKind::gbgb: {
      GBGB m{random_gb(rng, 1, 3), random_gb(rng, 1, 3)};
      c.p = unif(rng, 0.2, 1.0) * std::min(gb_radius(m.signal, 0.6), gb_radius(m.noise, 0.6));
      c.model = m;
      break;
    }
    case ModelKind::gbnormal: {
      GBNormal m;
      m.signal = random_gb(rng, 20, 60);
      c.p = unif(rng, 0.5, 1.0) * gb_radius(m.signal, 0.6);
      const double pm = c.p / (1.0 + unif(rng, 0.2, 0.7));
      m.noise = {c.p - pm, pm / unif(rng, 7.5, 13.0)};
      c.model = m;
      break;
    }
  }
  return c;
}

double validation_tolerance(ModelKind kind) {
  switch (kind) {
    case ModelKind::exp_lognormal:
    case ModelKind::gamma_lognormal:
    case ModelKind::gbgb:
    case ModelKind::gbnormal: return 1e-3;
    default: return 1e-6;
  }
}

std::vector<ValidationRow> run_validation(ModelKind kind, int draws, std::uint64_t seed, const CorrectConfig& cfg) {
  if (draws < 1) throw UsageError("validate: need at least one draw");
  std::mt19937_64 rng(seed);
  const double tol = validation_tolerance(kind);
  QuadConfig tight;
  tight.rel_tol = 1e-11;
  tight.abs_tol = 1e-14;
  std::vector<ValidationRow> rows;
  for (int i = 0; i < draws; ++i) {
    ValidationRow r;
    r.draw = i + 1;
    r.c = draw_validation_case(kind, rng);
    try {
      const Correction v = correct(r.c.p, r.c.model, cfg);
      r.value = v.value;
      r.path = v.path;
      r.oracle = posterior_mean_quadrature(r.c.p, r.c.model, tight);
      r.rel_error = std::abs(r.value - r.oracle) / std::abs(r.oracle);
      r.ok = r.rel_error <= tol;
    } catch (const Error& e) {
      r.error = e.what();
      r.value = r.oracle = r.rel_error = std::numeric_limits<double>::quiet_NaN();
      r.ok = false;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_validation(std::ostream& out, const std::vector<ValidationRow>& rows) {
  out << "draw\tmodel\tp\tcorrected\toracle\trel_error\tpath\tok\n";
  for (const auto& r : rows) {
    out << r.draw << '\t' << format_model(r.c.model) << '\t' << format_double(r.c.p) << '\t' << format_double(r.value)
        << '\t' << format_double(r.oracle) << '\t' << format_double(r.rel_error) << '\t'
        << (r.error.empty() ? path_name(r.path) : "error") << '\t' << (r.ok ? "yes" : "no") << '\n';
  }
}

}  // namespace bgc

#include "bgc/dists.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "bgc/error.hpp"
#include "bgc/quadrature.hpp"
#include "bgc/specfun.hpp"

namespace bgc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidParameter(msg);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

double gamma_log_pdf(double x, const GammaParams& g) {
  if (!(x > 0.0)) {
    if (x == 0.0 && g.alpha == 1.0) return -std::log(g.beta);
    if (x == 0.0 && g.alpha < 1.0) return kInf;
    return -kInf;
  }
  return (g.alpha - 1.0) * std::log(x) - x / g.beta - g.alpha * std::log(g.beta) - std::lgamma(g.alpha);
}

// ln (x/d)^a, kept in log form because the lognormal mapping drives d to 1e150.
double log_scaled_power(double x, const GBParams& p) { return p.a * (std::log(x) - std::log(p.d)); }

}  // namespace

void GBParams::validate() const {
  require(finite_positive(a), "GB: a must be positive");
  require(c >= 0.0 && c <= 1.0, "GB: c must lie in [0, 1]");
  require(finite_positive(d), "GB: d must be positive");
  require(finite_positive(u), "GB: u must be positive");
  require(finite_positive(v), "GB: v must be positive");
}

void NormalParams::validate() const {
  require(std::isfinite(mu), "normal: mu must be finite");
  require(finite_positive(sigma), "normal: sigma must be positive");
}

void ExpParams::validate() const { require(finite_positive(theta), "exponential: theta must be positive"); }

GammaParams GammaParams::from_rate(double alpha, double theta) {
  require(finite_positive(theta), "gamma: rate must be positive");
  return GammaParams{alpha, 1.0 / theta};
}

void GammaParams::validate() const {
  require(finite_positive(alpha), "gamma: alpha must be positive");
  require(finite_positive(beta), "gamma: beta must be positive");
}

void LognormalParams::validate() const {
  require(std::isfinite(mu), "lognormal: mu must be finite");
  require(finite_positive(sigma), "lognormal: sigma must be positive");
}

Dist signal_of(const ModelSpec& m) {
  return std::visit([](const auto& x) -> Dist { return x.signal; }, m);
}

Dist noise_of(const ModelSpec& m) {
  return std::visit([](const auto& x) -> Dist { return x.noise; }, m);
}

Dist component_of(const ModelSpec& m, Component c) { return c == Component::signal ? signal_of(m) : noise_of(m); }

void validate(const Dist& d) {
  std::visit([](const auto& x) { x.validate(); }, d);
}

void validate(const ModelSpec& m) {
  validate(signal_of(m));
  validate(noise_of(m));
  if (const auto* g = std::get_if<GBNormal>(&m))
    require(g->noise.mu > 0.0, "GB-normal: noise mu must be positive (noise is integrated over b > 0)");
}

bool noise_truncated_at_zero(const ModelSpec& m) {
  if (const auto* e = std::get_if<ExpNormal>(&m)) return e->bound == ExpNormalBound::observed;
  return std::holds_alternative<GBNormal>(m);
}

double gb_support_upper(const GBParams& p) {
  if (p.c >= 1.0) return kInf;
  return p.d / std::pow(1.0 - p.c, 1.0 / p.a);
}

double gb_log_pdf(double x, const GBParams& p) {
  p.validate();
  if (!(x > 0.0)) return -kInf;
  const double ly = log_scaled_power(x, p);
  const double y = std::exp(ly);
  const double inner = (1.0 - p.c) * y;
  if (inner > 1.0) return -kInf;
  double out = std::log(p.a) + (p.a * p.u - 1.0) * std::log(x) - p.a * p.u * std::log(p.d) - log_beta(p.u, p.v);
  if (p.v != 1.0) out += (p.v - 1.0) * std::log1p(-inner);
  if (p.c > 0.0) out -= (p.u + p.v) * std::log1p(p.c * y);
  return out;
}

double gb_pdf(double x, const GBParams& p) { return std::exp(gb_log_pdf(x, p)); }

GBParams gb_from_gamma(const GammaParams& g, double v_big) {
  g.validate();
  require(finite_positive(v_big), "gb_from_gamma: v_big must be positive");
  return GBParams{1.0, 1.0, g.beta * v_big, g.alpha, v_big};
}

GBParams gb_from_lognormal(const LognormalParams& l, double v_big, double a_small) {
  l.validate();
  require(finite_positive(v_big), "gb_from_lognormal: v_big must be positive");
  require(finite_positive(a_small), "gb_from_lognormal: a_small must be positive");
  const double s2a2 = l.sigma * l.sigma * a_small * a_small;
  // d = beta * v^(1/a) with beta = (sigma^2 a^2)^(1/a), assembled in logs.
  const double log_d = (std::log(s2a2) + std::log(v_big)) / a_small;
  const double d = std::exp(log_d);
  if (!std::isfinite(d) || d == 0.0)
    throw NumericError("gb_from_lognormal: d = exp(" + std::to_string(log_d) +
                       ") is not representable; shrink v_big or enlarge a_small");
  const double u = (a_small * l.mu + 1.0) / s2a2;
  if (!(u > 0.0)) throw InvalidParameter("gb_from_lognormal: mapped u is not positive (a_small * mu < -1)");
  return GBParams{a_small, 1.0, d, u, v_big};
}

double log_pdf(double x, const Dist& d) {
  validate(d);
  return std::visit(overloaded{
                        [x](const ExpParams& e) { return x < 0.0 ? -kInf : std::log(e.theta) - e.theta * x; },
                        [x](const NormalParams& n) { return log_std_normal_pdf((x - n.mu) / n.sigma) - std::log(n.sigma); },
                        [x](const GammaParams& g) { return gamma_log_pdf(x, g); },
                        [x](const LognormalParams& l) {
                          if (!(x > 0.0)) return -kInf;
                          const double lx = std::log(x);
                          return log_std_normal_pdf((lx - l.mu) / l.sigma) - std::log(l.sigma) - lx;
                        },
                        [x](const GBParams& g) { return gb_log_pdf(x, g); },
                    },
                    d);
}

double pdf(double x, const Dist& d) { return std::exp(log_pdf(x, d)); }

double pdf(double x, const ModelSpec& m, Component c) { return pdf(x, component_of(m, c)); }

double support_lower(const Dist& d) { return std::holds_alternative<NormalParams>(d) ? -kInf : 0.0; }

double support_upper(const Dist& d) {
  if (const auto* g = std::get_if<GBParams>(&d)) return gb_support_upper(*g);
  return kInf;
}

std::vector<double> landmarks(const Dist& d) {
  std::vector<double> out;
  std::visit(overloaded{
                 [&](const ExpParams& e) {
                   for (double k : {0.1, 1.0, 5.0, 20.0, 50.0}) out.push_back(k / e.theta);
                 },
                 [&](const NormalParams& n) {
                   for (double k : {-10.0, -5.0, -2.0, 0.0, 2.0, 5.0, 10.0}) out.push_back(n.mu + k * n.sigma);
                 },
                 [&](const GammaParams& g) {
                   const double m = g.alpha * g.beta;
                   const double s = std::sqrt(g.alpha) * g.beta;
                   if (g.alpha > 1.0) out.push_back((g.alpha - 1.0) * g.beta);
                   for (double k : {-2.0, 0.0, 2.0, 5.0, 10.0, 30.0}) out.push_back(m + k * s);
                   out.push_back(0.01 * m);
                 },
                 [&](const LognormalParams& l) {
                   for (double k : {-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0}) out.push_back(std::exp(l.mu + k * l.sigma));
                 },
                 [&](const GBParams& g) {
                   // (x/d)^a = r/(1 + (1-c) r) with r ~ beta-prime(u, v); walk r through its log-scale bulk.
                   const double spread = std::sqrt(1.0 / g.u + 1.0 / g.v);
                   for (double k : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
                     const double log_r = std::log(g.u / g.v) + k * spread;
                     const double log_w = log_r - std::log1p((1.0 - g.c) * std::exp(log_r));
                     out.push_back(std::exp(std::log(g.d) + log_w / g.a));
                   }
                   const double up = gb_support_upper(g);
                   if (std::isfinite(up))
                     for (double f : {0.5, 0.9, 0.99}) out.push_back(f * up);
                 },
             },
             d);
  const double lo = support_lower(d), hi = support_upper(d);
  std::erase_if(out, [&](double x) { return !(x > lo && x < hi && std::isfinite(x)); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

double gb_moment(const GBParams& g, int k) {
  if (g.c >= 1.0 && g.a * g.v <= k) return kInf;
  std::vector<double> knots{0.0};
  for (double x : landmarks(g)) knots.push_back(x);
  const double up = gb_support_upper(g);
  knots.push_back(up);
  QuadConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-300;
  cfg.max_subdivisions = 5000;
  return integrate_scalar([&](double x) { return std::pow(x, k) * gb_pdf(x, g); }, std::span<const double>(knots), cfg);
}

}  // namespace

double mean(const Dist& d) {
  validate(d);
  return std::visit(overloaded{
                        [](const ExpParams& e) { return 1.0 / e.theta; },
                        [](const NormalParams& n) { return n.mu; },
                        [](const GammaParams& g) { return g.alpha * g.beta; },
                        [](const LognormalParams& l) { return std::exp(l.mu + 0.5 * l.sigma * l.sigma); },
                        [](const GBParams& g) { return gb_moment(g, 1); },
                    },
                    d);
}

double variance(const Dist& d) {
  validate(d);
  return std::visit(overloaded{
                        [](const ExpParams& e) { return 1.0 / (e.theta * e.theta); },
                        [](const NormalParams& n) { return n.sigma * n.sigma; },
                        [](const GammaParams& g) { return g.alpha * g.beta * g.beta; },
                        [](const LognormalParams& l) {
                          const double s2 = l.sigma * l.sigma;
                          return std::expm1(s2) * std::exp(2.0 * l.mu + s2);
                        },
                        [](const GBParams& g) {
                          const double m = gb_moment(g, 1);
                          return gb_moment(g, 2) - m * m;
                        },
                    },
                    d);
}

double draw(const Dist& d, std::mt19937_64& rng) {
  return std::visit(overloaded{
                        [&](const ExpParams& e) { return std::exponential_distribution<double>(e.theta)(rng); },
                        [&](const NormalParams& n) { return std::normal_distribution<double>(n.mu, n.sigma)(rng); },
                        [&](const GammaParams& g) { return std::gamma_distribution<double>(g.alpha, g.beta)(rng); },
                        [&](const LognormalParams& l) { return std::lognormal_distribution<double>(l.mu, l.sigma)(rng); },
                        [&](const GBParams& g) {
                          // Exact transform: with G1 ~ gamma(u), G2 ~ gamma(v),
                          // (x/d)^a = G1 / (G2 + (1-c) G1) has the GB law.
                          std::gamma_distribution<double> g1(g.u, 1.0), g2(g.v, 1.0);
                          for (;;) {
                            const double x1 = g1(rng);
                            const double x2 = g2(rng);
                            const double w = x1 / (x2 + (1.0 - g.c) * x1);
                            const double x = g.d * std::exp(std::log(w) / g.a);
                            if (x > 0.0 && std::isfinite(x) && x < gb_support_upper(g)) return x;
                          }
                        },
                    },
                    d);
}

std::vector<double> sample(const Dist& d, std::size_t n, std::uint64_t seed) {
  validate(d);
  std::mt19937_64 rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = draw(d, rng);
  return out;
}

std::vector<double> sample(const ModelSpec& m, Component c, std::size_t n, std::uint64_t seed) {
  return sample(component_of(m, c), n, seed);
}

std::string family_name(const Dist& d) {
  return std::visit(overloaded{
                        [](const ExpParams&) { return std::string("exponential"); },
                        [](const NormalParams&) { return std::string("normal"); },
                        [](const GammaParams&) { return std::string("gamma"); },
                        [](const LognormalParams&) { return std::string("lognormal"); },
                        [](const GBParams&) { return std::string("gb"); },
                    },
                    d);
}

}  // namespace bgc

#include "bgc/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "bgc/error.hpp"
#include "bgc/gamma_normal_grid.hpp"
#include "bgc/score.hpp"

namespace bgc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sample_mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

// Biased (1/n) variance.
double sample_var(const std::vector<double>& x) {
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / x.size();
}

double quantile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double pos = q * (x.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= x.size()) return x.back();
  return x[i] + (pos - i) * (x[i + 1] - x[i]);
}

GammaParams gamma_from_moments(double m, double v) { return {m * m / v, v / m}; }

GBParams gb_start(const GammaParams& g) {
  GBParams b = gb_from_gamma(g, 1e3);
  b.c = std::clamp(b.c, 1e-6, 1.0 - 1e-6);
  b.a = std::min(b.a, kMaxGBShape);
  return b;
}

// Floored differences observed - mean(negatives); the floor is the 1% quantile
// of the positive differences.
struct Differences {
  std::vector<double> x;
  double floor = 0.0;
};

Differences floored_differences(const EstimationProblem& pr) {
  const double m0 = sample_mean(pr.negatives);
  Differences d;
  std::vector<double> pos;
  for (double p : pr.observed)
    if (p - m0 > 0.0) pos.push_back(p - m0);
  if (pos.empty()) throw DataFormatError("no observed intensity exceeds the mean negative control");
  d.floor = quantile(pos, 0.01);
  for (double p : pr.observed) d.x.push_back(std::max(p - m0, d.floor));
  return d;
}

void require_controls(const EstimationProblem& pr) {
  if (pr.negatives.size() < 2 || !(sample_var(pr.negatives) > 0.0))
    throw DataFormatError("degenerate negative controls: need at least two distinct values");
}

// Parameter transforms for the unconstrained search.
enum class Tr { log, logit, identity };

std::vector<Tr> transforms(ModelKind k) {
  const std::vector<Tr> gb = {Tr::log, Tr::logit, Tr::log, Tr::log, Tr::log};
  switch (k) {
    case ModelKind::rma:
    case ModelKind::mbcb:
    case ModelKind::exp_lognormal: return {Tr::log, Tr::identity, Tr::log};
    case ModelKind::exp_gamma: return {Tr::log, Tr::log, Tr::log};
    case ModelKind::gamma_normal:
    case ModelKind::gamma_lognormal: return {Tr::log, Tr::log, Tr::identity, Tr::log};
    case ModelKind::gbgb: {
      auto t = gb;
      t.insert(t.end(), gb.begin(), gb.end());
      return t;
    }
    case ModelKind::gbnormal: {
      auto t = gb;
      t.push_back(Tr::log);  // mu > 0 for this family
      t.push_back(Tr::log);
      return t;
    }
  }
  return {};
}

double forward(double v, Tr t) {
  switch (t) {
    case Tr::log: return std::log(v);
    case Tr::logit: return std::log(v / (1.0 - v));
    case Tr::identity: return v;
  }
  return v;
}

double backward(double y, Tr t) {
  switch (t) {
    case Tr::log: return std::exp(y);
    case Tr::logit: return 1.0 / (1.0 + std::exp(-y));
    case Tr::identity: return y;
  }
  return y;
}

bool in_search_box(ModelKind k, const std::vector<double>& v) {
  auto gb_ok = [&](std::size_t o) { return v[o] <= kMaxGBShape && v[o + 4] <= kMaxGBV && v[o + 1] > 0.0 && v[o + 1] < 1.0; };
  if (k == ModelKind::gbgb) return gb_ok(0) && gb_ok(5);
  if (k == ModelKind::gbnormal) return gb_ok(0);
  return true;
}

double gene_term(double p, const ModelSpec& m, const CorrectConfig& cfg) {
  try {
    return log_marginal(p, m, cfg).value;
  } catch (const NumericError&) {
    return -kInf;
  } catch (const DomainError&) {
    return -kInf;
  }
}

double control_term(double b, const Dist& noise) {
  const double v = log_pdf(b, noise);
  return std::isnan(v) ? -kInf : v;
}

// The grid backend evaluates all genes with one convolution.
bool grid_terms(const ModelSpec& m, const EstimationProblem& pr, std::vector<double>& terms) {
  const auto* gn = std::get_if<GammaNormal>(&m);
  if (!gn || pr.cfg.gamma_normal != GammaNormalBackend::grid) return false;
  GridConfig gc;
  gc.points_per_sigma = pr.cfg.grid_points_per_sigma;
  gc.throw_on_unresolved = false;
  GridResult r;
  try {
    r = gamma_normal_grid(pr.observed, gn->signal, gn->noise, gc);
  } catch (const NumericError&) {
    return false;
  }
  std::copy(r.log_marginal.begin(), r.log_marginal.end(), terms.begin());
  CorrectConfig quad = pr.cfg;
  quad.gamma_normal = GammaNormalBackend::quadrature;
  for (std::size_t i : r.unresolved) terms[i] = pr.cfg.fallback ? gene_term(pr.observed[i], m, quad) : -kInf;
  return true;
}

double assemble(const std::vector<double>& terms) {
  double s = 0.0;
  for (double t : terms) {
    if (!(t > -kInf)) return -kInf;
    s += t;
  }
  return s;
}

FitResult finish(FitResult r, const EstimationProblem& pr) {
  r.loglik = loglik(r.params, pr);
  r.gradient_norm = std::numeric_limits<double>::quiet_NaN();
  try {
    std::vector<double> g;
    if (const auto* x = std::get_if<GBGB>(&r.params))
      g = score_gb(*x, pr);
    else if (const auto* y = std::get_if<GBNormal>(&r.params))
      g = score_gb_normal(*y, pr);
    if (!g.empty()) {
      double s = 0.0;
      for (double v : g) s += v * v;
      r.gradient_norm = std::sqrt(s);
    }
  } catch (const Error& e) {
    r.diagnostics.push_back(std::string("score unavailable: ") + e.what());
  }
  return r;
}

}  // namespace

void EstimationProblem::validate() const {
  if (observed.empty()) throw DataFormatError("no regular genes");
  for (double p : observed)
    if (!(p > 0.0) || !std::isfinite(p)) throw DataFormatError("observed intensities must be positive and finite");
  for (double b : negatives)
    if (!(b > 0.0) || !std::isfinite(b)) throw DataFormatError("negative-control intensities must be positive and finite");
  cfg.validate();
}

std::string method_name(FitMethod m) {
  switch (m) {
    case FitMethod::mle: return "mle";
    case FitMethod::moments: return "moments";
    case FitMethod::plugin: return "plugin";
  }
  return "?";
}

FitMethod parse_fit_method(const std::string& name) {
  if (name == "mle") return FitMethod::mle;
  if (name == "moments") return FitMethod::moments;
  if (name == "plugin" || name == "plug-in") return FitMethod::plugin;
  throw UsageError("unknown method '" + name + "' (known: mle, moments, plugin)");
}

ModelSpec init_params(const EstimationProblem& pr) {
  pr.validate();
  require_controls(pr);
  const auto& neg = pr.negatives;
  const double m0 = sample_mean(neg), v0 = sample_var(neg);
  const NormalParams normal{m0, std::sqrt(v0)};
  std::vector<double> logs;
  for (double b : neg) logs.push_back(std::log(b));
  const LognormalParams lognormal{sample_mean(logs), std::sqrt(sample_var(logs))};
  if (!(lognormal.sigma > 0.0)) throw DataFormatError("degenerate negative controls");
  const GammaParams gamma_noise = gamma_from_moments(m0, v0);

  const auto d = floored_differences(pr);
  const double ms = sample_mean(d.x), vs = sample_var(d.x);
  const ExpParams exp_sig{1.0 / ms};
  const GammaParams gamma_sig = vs > 0.0 ? gamma_from_moments(ms, vs) : GammaParams{1.0, ms};

  switch (pr.kind) {
    case ModelKind::rma: return ExpNormal{exp_sig, normal, ExpNormalBound::observed};
    case ModelKind::mbcb: return ExpNormal{exp_sig, normal, ExpNormalBound::unbounded};
    case ModelKind::exp_gamma: return ExpGamma{exp_sig, gamma_noise};
    case ModelKind::gamma_normal: return GammaNormal{gamma_sig, normal};
    case ModelKind::exp_lognormal: return ExpLognormal{exp_sig, lognormal};
    case ModelKind::gamma_lognormal: return GammaLognormal{gamma_sig, lognormal};
    case ModelKind::gbgb: return GBGB{gb_start(gamma_sig), gb_start(gamma_noise)};
    case ModelKind::gbnormal: return GBNormal{gb_start(gamma_sig), normal};
  }
  throw UsageError("unknown model kind");
}

double loglik(const ModelSpec& m, const EstimationProblem& pr) {
  validate(m);
  const std::size_t n = pr.observed.size();
  std::vector<double> terms(n);
  if (!grid_terms(m, pr, terms)) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (long long i = 0; i < nn; ++i) terms[i] = gene_term(pr.observed[i], m, pr.cfg);
  }
  const Dist noise = noise_of(m);
  for (double b : pr.negatives) terms.push_back(control_term(b, noise));
  return assemble(terms);
}

double loglik_serial(const ModelSpec& m, const EstimationProblem& pr) {
  validate(m);
  std::vector<double> terms(pr.observed.size());
  if (!grid_terms(m, pr, terms))
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = gene_term(pr.observed[i], m, pr.cfg);
  const Dist noise = noise_of(m);
  for (double b : pr.negatives) terms.push_back(control_term(b, noise));
  return assemble(terms);
}

std::vector<double> score_in_param_order(const ModelSpec& m, const EstimationProblem& pr) {
  if (const auto* x = std::get_if<GBGB>(&m)) {
    auto g = score_gb(*x, pr);  // noise block first
    std::rotate(g.begin(), g.begin() + 5, g.end());
    return g;
  }
  if (const auto* y = std::get_if<GBNormal>(&m)) {
    auto g = score_gb_normal(*y, pr);  // mu, sigma first
    std::rotate(g.begin(), g.begin() + 2, g.end());
    return g;
  }
  return {};
}

namespace {

// BFGS on -loglik in the transformed space, starting from y. Only steps that
// raise the likelihood are taken; stops at the first failed line search.
std::vector<double> polish(std::vector<double> y, const std::vector<Tr>& tr, ModelKind kind, const EstimationProblem& pr,
                           int iterations, int& steps) {
  const std::size_t n = y.size();
  auto values = [&](const std::vector<double>& z) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = backward(z[i], tr[i]);
    return v;
  };
  auto objective = [&](const std::vector<double>& z) {
    const auto v = values(z);
    if (!in_search_box(kind, v)) return kInf;
    try {
      return -loglik(from_values(kind, v), pr);
    } catch (const Error&) {
      return kInf;
    }
  };
  auto gradient = [&](const std::vector<double>& z) {
    const auto v = values(z);
    auto g = score_in_param_order(from_values(kind, v), pr);
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = tr[i] == Tr::log ? v[i] : tr[i] == Tr::logit ? v[i] * (1.0 - v[i]) : 1.0;
      g[i] = -g[i] * dv;
    }
    return g;
  };
  double f = objective(y);
  if (!std::isfinite(f)) return y;
  std::vector<double> g;
  try {
    g = gradient(y);
  } catch (const Error&) {
    return y;
  }
  std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) h[i][i] = 1.0;
  bool scaled = false;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i] -= h[i][j] * g[j];
    double slope = 0.0, dnorm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      slope += d[i] * g[i];
      dnorm = std::max(dnorm, std::abs(d[i]));
    }
    if (!(slope < 0.0)) break;
    // keep the first trial step inside one unit of the transformed space
    double t = std::min(1.0, 1.0 / dnorm);
    std::vector<double> yn(n);
    double fn = kInf;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) yn[i] = y[i] + t * d[i];
      fn = objective(yn);
      if (fn <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    std::vector<double> gn;
    try {
      gn = gradient(yn);
    } catch (const Error&) {
      break;
    }
    std::vector<double> s(n), q(n);
    double sq = 0.0, qq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = yn[i] - y[i];
      q[i] = gn[i] - g[i];
      sq += s[i] * q[i];
      qq += q[i] * q[i];
    }
    y = yn;
    g = gn;
    const double df = f - fn;
    f = fn;
    ++steps;
    if (sq > 1e-12 * std::sqrt(qq) * std::sqrt(std::inner_product(s.begin(), s.end(), s.begin(), 0.0))) {
      if (!scaled) {
        for (std::size_t i = 0; i < n; ++i) h[i][i] = sq / qq;
        scaled = true;
      }
      // inverse-Hessian BFGS update
      std::vector<double> hq(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hq[i] += h[i][j] * q[j];
      const double qhq = std::inner_product(q.begin(), q.end(), hq.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          h[i][j] += ((sq + qhq) * s[i] * s[j]) / (sq * sq) - (hq[i] * s[j] + s[i] * hq[j]) / sq;
    }
    if (df <= 1e-14 * std::abs(f)) break;
  }
  return y;
}

}  // namespace

FitResult fit_mle(const EstimationProblem& pr, const FitOptions& opt) {
  if (opt.starts < 1) throw InvalidParameter("fit_mle: starts must be at least 1");
  if (!(opt.jitter >= 0.0)) throw InvalidParameter("fit_mle: jitter must be non-negative");
  opt.simplex.validate();
  const ModelSpec init = init_params(pr);
  const ModelKind kind = pr.kind;
  const auto tr = transforms(kind);
  const auto v0 = param_values(init);
  std::vector<double> y0(v0.size());
  for (std::size_t i = 0; i < v0.size(); ++i) y0[i] = forward(v0[i], tr[i]);

  auto to_values = [&](const std::vector<double>& y) {
    std::vector<double> v(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) v[i] = backward(y[i], tr[i]);
    return v;
  };
  const double scale = static_cast<double>(pr.observed.size() + pr.negatives.size());
  auto objective = [&](const std::vector<double>& y) {
    const auto v = to_values(y);
    if (!in_search_box(kind, v)) return kInf;
    try {
      return -loglik(from_values(kind, v), pr) / scale;
    } catch (const Error&) {
      return kInf;
    }
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> jit(0.0, 1.0);
  NelderMeadResult best;
  best.f = kInf;
  int iterations = 0;
  bool any_converged = false;
  std::vector<std::string> diag;
  for (int s = 0; s < opt.starts; ++s) {
    auto y = y0;
    if (s > 0)
      for (double& c : y) c += opt.jitter * jit(rng);
    NelderMeadResult r;
    try {
      r = nelder_mead(objective, y, opt.simplex);
    } catch (const NumericError&) {
      diag.push_back("start " + std::to_string(s) + " infeasible");
      continue;
    }
    iterations += r.iterations;
    if (r.f < best.f) {
      best = r;
      any_converged = r.converged;
    }
  }
  FitResult out;
  out.method = FitMethod::mle;
  out.iterations = iterations;
  out.diagnostics = diag;
  if (!std::isfinite(best.f)) {
    out.params = init;
    out.converged = false;
    out.diagnostics.push_back("no feasible start");
    out.loglik = -kInf;
    out.gradient_norm = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  if (opt.polish_iterations > 0 && (kind == ModelKind::gbgb || kind == ModelKind::gbnormal)) {
    int steps = 0;
    const auto y = polish(best.x, tr, kind, pr, opt.polish_iterations, steps);
    if (steps > 0) {
      best.x = y;
      out.diagnostics.push_back("gradient polish: " + std::to_string(steps) + " steps");
    }
  }
  out.params = from_values(kind, to_values(best.x));
  // Spread of parameters over simplex vertices within one log-likelihood unit.
  const auto vb = to_values(best.x);
  double flat = 0.0;
  for (std::size_t j = 0; j < best.simplex.size(); ++j) {
    if ((best.simplex_f[j] - best.f) * scale > 1.0) continue;
    const auto vj = to_values(best.simplex[j]);
    for (std::size_t i = 0; i < vj.size(); ++i)
      flat = std::max(flat, std::abs(vj[i] - vb[i]) / std::max(std::abs(vb[i]), 1e-12));
  }
  out.profile_flatness = flat;
  out = finish(std::move(out), pr);
  out.converged = any_converged && std::isfinite(out.loglik);
  if (!any_converged) out.diagnostics.push_back("simplex budget exhausted");
  return out;
}

FitResult fit_moments(const EstimationProblem& pr) {
  pr.validate();
  if (pr.kind == ModelKind::gbgb || pr.kind == ModelKind::gbnormal)
    throw UnsupportedMethod("method of moments is not available for " + kind_name(pr.kind) +
                            " (five signal parameters are not moment-identifiable)");
  require_controls(pr);
  FitResult out;
  out.method = FitMethod::moments;
  const ModelSpec noise_init = init_params(pr);  // noise part from the controls

  const double d_mean_raw = sample_mean(pr.observed) - sample_mean(pr.negatives);
  const double d_var_raw = sample_var(pr.observed) - sample_var(pr.negatives);
  const double eps = floored_differences(pr).floor;
  double d_mean = d_mean_raw, d_var = d_var_raw;
  if (!(d_mean > eps)) {
    d_mean = eps;
    out.diagnostics.push_back("mean difference clamped to " + format_double(eps));
  }
  const bool needs_var = pr.kind == ModelKind::gamma_normal || pr.kind == ModelKind::gamma_lognormal;
  if (needs_var && !(d_var > eps * eps)) {
    d_var = eps * eps;
    out.diagnostics.push_back("variance difference clamped to " + format_double(d_var));
  }
  const ExpParams e{1.0 / d_mean};
  const GammaParams g = gamma_from_moments(d_mean, d_var);
  out.params = std::visit(
      [&](const auto& x) -> ModelSpec {
        using T = std::decay_t<decltype(x)>;
        T y = x;
        if constexpr (std::is_same_v<T, ExpNormal> || std::is_same_v<T, ExpGamma> || std::is_same_v<T, ExpLognormal>)
          y.signal = e;
        else if constexpr (std::is_same_v<T, GammaNormal> || std::is_same_v<T, GammaLognormal>)
          y.signal = g;
        return y;
      },
      noise_init);
  out = finish(std::move(out), pr);
  out.converged = std::isfinite(out.loglik);
  return out;
}

FitResult fit_plugin(const EstimationProblem& pr) {
  FitResult out;
  out.method = FitMethod::plugin;
  out.params = init_params(pr);
  out = finish(std::move(out), pr);
  out.converged = std::isfinite(out.loglik);
  return out;
}

FitResult fit(const EstimationProblem& pr, FitMethod method, const FitOptions& opt) {
  switch (method) {
    case FitMethod::mle: return fit_mle(pr, opt);
    case FitMethod::moments: return fit_moments(pr);
    case FitMethod::plugin: return fit_plugin(pr);
  }
  throw UsageError("unknown method");
}

}  // namespace bgc

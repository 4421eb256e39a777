#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "bgc/dists.hpp"
#include "bgc/error.hpp"
#include "bgc/log_sum.hpp"

// Truncation-controlled evaluation of the convolution series C1..C8.
// Every eval_* either returns a converged value or throws SeriesError; the
// correct module catches and falls back to quadrature.

namespace bgc {

// corrected: B(A1, A2) from the substitution z = s/p.
// paper_literal: the printed B(A1 - 1, A2 - 1), kept for auditing.
enum class BetaArgs { corrected, paper_literal };

struct SeriesConfig {
  double rel_tol = 1e-10;
  int max_terms_per_index = 200;
  int stable_window = 3;
  // sum|term| / |sum| above this means cancellation ate the precision.
  double max_condition = 1e8;
  BetaArgs beta_args = BetaArgs::corrected;

  void validate() const;
};

struct SeriesValue {
  double value = 0.0;
  double log_abs = 0.0;
  int sign = 0;
  std::vector<int> terms_used;  // per summation index, in the order the formula names them
  bool converged = false;
  double condition = 1.0;
};

// Exponential-lognormal: C1 (marginal) and C2 (posterior numerator). theta may be 0.
SeriesValue eval_C1(double p, const ExpParams& e, const LognormalParams& l, const SeriesConfig& cfg = {});
SeriesValue eval_C2(double p, const ExpParams& e, const LognormalParams& l, const SeriesConfig& cfg = {});

// Gamma-lognormal: double sums over (k, n).
SeriesValue eval_C3(double p, const GammaParams& g, const LognormalParams& l, const SeriesConfig& cfg = {});
SeriesValue eval_C4(double p, const GammaParams& g, const LognormalParams& l, const SeriesConfig& cfg = {});

// GB-GB: quadruple sums over (l, m, n, r), regrouped by l+n and m+r.
SeriesValue eval_C5(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg = {});
SeriesValue eval_C6(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg = {});

// GB-normal: triple sums over (l, m, n); the n-index carries the Gaussian moments.
SeriesValue eval_C7(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg = {});
SeriesValue eval_C8(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg = {});
// Second-moment companion of C8: E[S^2 | p] = p^2 C9 / C7.
SeriesValue eval_C9(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg = {});

// Regions where the binomial expansions converge.
bool convergence_ok(double p, const GammaParams& g, const LognormalParams& l);
bool convergence_ok(double p, const GBParams& s, const GBParams& b);
bool convergence_ok(double p, const GBParams& s, const NormalParams& b);

double log_K1(const GBParams& s, const GBParams& b);
double log_K2(double p, const GBParams& s);

double log_marginal_exp_lognormal(double p, const ExpParams& e, const LognormalParams& l, const SeriesConfig& cfg = {});
double log_marginal_gamma_lognormal(double p, const GammaParams& g, const LognormalParams& l,
                                    const SeriesConfig& cfg = {});
double log_marginal_gb(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg = {});
double log_marginal_gb_normal(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg = {});
double marginal_gb(double p, const GBParams& s, const GBParams& b, const SeriesConfig& cfg = {});
double marginal_gb_normal(double p, const GBParams& s, const NormalParams& b, const SeriesConfig& cfg = {});

namespace detail {

// log|binom(r, k)| and sign, extended on demand.
struct BinomialRow {
  explicit BinomialRow(double r) : r(r) { terms.push_back({0.0, 1}); }
  LogTerm at(int k);
  double r;
  std::vector<LogTerm> terms;
};

// d/dr binom(r, k), extended on demand; finite even where binom(r, k) = 0.
struct BinomialDerivRow {
  explicit BinomialDerivRow(double r) : r(r) { terms.push_back({}); }
  LogTerm at(int k);
  double r;
  // (vv, dd) * e^sc = (binom(r, i), d/dr binom(r, i)) for the last computed i.
  double vv = 1.0, dd = 0.0, sc = 0.0;
  std::vector<LogTerm> terms;
};

// Expansion of one GB density in powers of y = (x/d)^a:
// (1 - (1-c) y)^(v-1) (1 + c y)^(-(u+v)) = sum_j alpha(j) y^j with
// alpha(j) = sum_{l+n=j} b1(l) b2(n). Derivative companions are
// sum_{l+n=j} b1 b2 * d/dtheta ln(b1 b2) for theta in {c, u, v}.
struct GBExpansion {
  GBExpansion(double log_y, const GBParams& g, bool with_derivatives);

  // Extends all sequences through index j.
  void ensure(int j);

  double log_y;
  GBParams g;
  bool derivs;
  std::vector<LogTerm> b1, b2, b1_v;  // b1_v = d b1 / dv
  BinomialDerivRow v_row;
  std::vector<LogTerm> alpha, alpha_abs, alpha_c, alpha_u, alpha_v;
  int b1_nonzero = 0;  // leading nonzero count among computed b1
  int b2_nonzero = 0;
};

template <std::size_t K>
struct RectSum {
  std::array<LogSum, K> sums;
  int extent = 0;
  std::array<int, 2> used{0, 0};  // 1 + last index with a nonzero term, per axis
};

// Sums term(i, k, out, bound) over growing squares (or a growing prefix when
// axes == 1), shell by shell, until stable_window consecutive shells change
// every component by less than rel_tol. out[0] is the series proper; further
// components (derivative numerators) share the truncation.
template <std::size_t K, class Term>
RectSum<K> sum_rectangle(Term&& term, int axes, const SeriesConfig& cfg, const std::string& name) {
  RectSum<K> r;
  int stable = 0;
  for (int n = 0;; ++n) {
    if (n >= cfg.max_terms_per_index)
      throw SeriesError(name + ": no convergence within " + std::to_string(cfg.max_terms_per_index) +
                        " terms per index");
    std::array<LogSum, K> shell;
    auto visit = [&](int i, int k) {
      std::array<LogTerm, K> out{};
      LogTerm bound;
      term(i, k, out, bound);
      if (!out[0].zero()) {
        r.used[0] = std::max(r.used[0], i + 1);
        r.used[1] = std::max(r.used[1], k + 1);
      }
      for (std::size_t c = 0; c < K; ++c) {
        if (c == 0) {
          shell[0].add(out[0], bound.zero() ? out[0].abs() : bound);
          r.sums[0].add(out[0], bound.zero() ? out[0].abs() : bound);
        } else {
          shell[c].add(out[c]);
          r.sums[c].add(out[c]);
        }
      }
    };
    if (axes == 1) {
      visit(n, 0);
    } else {
      for (int i = 0; i < n; ++i) {
        visit(i, n);
        visit(n, i);
      }
      visit(n, n);
    }
    r.extent = n + 1;
    bool ok = true;
    for (std::size_t c = 0; c < K && ok; ++c) {
      const LogTerm d = shell[c].total();
      if (d.zero()) continue;
      double ref = r.sums[c].total().log_abs;
      if (c > 0) {
        const LogTerm a = r.sums[c].abs_total();
        if (!a.zero()) ref = std::max(ref, a.log_abs + std::log(1e-6));
      }
      if (!(d.log_abs - ref <= std::log(cfg.rel_tol))) ok = false;
    }
    stable = ok ? stable + 1 : 0;
    if (stable >= cfg.stable_window && n >= cfg.stable_window) break;
  }
  if (r.sums[0].condition() > cfg.max_condition)
    throw SeriesError(name + ": cancellation (condition number " + std::to_string(r.sums[0].condition()) +
                      ") exceeds the precision budget");
  return r;
}

// Sums term(j, n, out, bound) with n innermost: each inner sum runs past
// n = inner_floor(j) and then until stable_window consecutive terms are below
// rel_tol of the running total; the outer sum stops on the same test applied
// to whole inner sums. For series that converge only in this order.
template <std::size_t K, class Term, class Floor>
RectSum<K> sum_nested(Term&& term, Floor&& inner_floor, const SeriesConfig& cfg, const std::string& name) {
  RectSum<K> r;
  auto small = [&](const std::array<LogSum, K>& part, const std::array<LogSum, K>& whole) {
    for (std::size_t c = 0; c < K; ++c) {
      const LogTerm d = part[c].total();
      if (d.zero()) continue;
      LogSum both = whole[c];
      both.add(part[c]);
      double ref = both.total().log_abs;
      if (c > 0) {
        const LogTerm a = both.abs_total();
        if (!a.zero()) ref = std::max(ref, a.log_abs + std::log(1e-6));
      }
      if (!(d.log_abs - ref <= std::log(cfg.rel_tol))) return false;
    }
    return true;
  };
  int stable_outer = 0;
  for (int j = 0;; ++j) {
    if (j >= cfg.max_terms_per_index)
      throw SeriesError(name + ": no convergence within " + std::to_string(cfg.max_terms_per_index) +
                        " terms per index");
    const int floor = std::max(0, static_cast<int>(std::ceil(inner_floor(j))));
    const int cap = cfg.max_terms_per_index + floor;
    std::array<LogSum, K> inner;
    int stable = 0;
    for (int n = 0;; ++n) {
      if (n >= cap)
        throw SeriesError(name + ": inner sum did not converge within " + std::to_string(cap) + " terms");
      std::array<LogTerm, K> out{};
      LogTerm bound;
      term(j, n, out, bound);
      if (!out[0].zero()) {
        r.used[0] = std::max(r.used[0], j + 1);
        r.used[1] = std::max(r.used[1], n + 1);
      }
      std::array<LogSum, K> single;
      for (std::size_t c = 0; c < K; ++c) {
        const LogTerm bd = c == 0 && !bound.zero() ? bound : out[c].abs();
        single[c].add(out[c], bd);
        inner[c].add(out[c], bd);
      }
      // compare against everything summed so far, this inner sum included
      std::array<LogSum, K> whole = r.sums;
      for (std::size_t c = 0; c < K; ++c) whole[c].add(inner[c]);
      stable = small(single, whole) ? stable + 1 : 0;
      if (n >= floor && stable >= cfg.stable_window) break;
    }
    const bool done = small(inner, r.sums);
    for (std::size_t c = 0; c < K; ++c) r.sums[c].add(inner[c]);
    r.extent = j + 1;
    stable_outer = done ? stable_outer + 1 : 0;
    if (stable_outer >= cfg.stable_window && j >= cfg.stable_window) break;
  }
  if (r.sums[0].condition() > cfg.max_condition)
    throw SeriesError(name + ": cancellation (condition number " + std::to_string(r.sums[0].condition()) +
                      ") exceeds the precision budget");
  return r;
}

}  // namespace detail

}  // namespace bgc

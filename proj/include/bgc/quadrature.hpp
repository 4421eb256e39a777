#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "bgc/error.hpp"

// Adaptive Gauss-Kronrod (7/15) integration of vector-valued integrands.
// All components share one subdivision tree, so ratios of components (the
// posterior mean) see identical discretisation.

namespace bgc {

struct QuadConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 2000;

  void validate() const;
};

template <std::size_t N>
struct QuadResult {
  std::array<double, N> value{};
  std::array<double, N> error{};
  int subdivisions = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// Maps the integration variable t of one segment back to x, with jacobian.
struct Segment {
  enum class Kind { finite, upper_tail, lower_tail };
  Kind kind = Kind::finite;
  double a = 0.0;      // finite: [a, b]; upper_tail: x = a + L t/(1-t); lower_tail: x = a - L t/(1-t)
  double b = 1.0;
  double scale = 1.0;  // L for tails

  double lo() const { return kind == Kind::finite ? a : 0.0; }
  double hi() const { return kind == Kind::finite ? b : 1.0; }

  // Returns x and writes dx/dt into jac.
  double map(double t, double& jac) const {
    if (kind == Kind::finite) {
      jac = 1.0;
      return t;
    }
    const double one_minus = 1.0 - t;
    jac = scale / (one_minus * one_minus);
    const double offset = scale * t / one_minus;
    return kind == Kind::upper_tail ? a + offset : a - offset;
  }
};

template <std::size_t N>
struct Interval {
  std::size_t segment = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::array<double, N> value{};
  std::array<double, N> error{};
  double priority = 0.0;
  bool operator<(const Interval& other) const { return priority < other.priority; }
};

template <std::size_t N, class F>
void gauss_kronrod(const F& f, const Segment& seg, Interval<N>& iv) {
  const double centre = 0.5 * (iv.lo + iv.hi);
  const double half = 0.5 * (iv.hi - iv.lo);
  std::array<double, N> kronrod{};
  std::array<double, N> gauss{};
  std::array<std::array<double, N>, 15> samples{};
  auto eval = [&](double t) {
    double jac = 0.0;
    const double x = seg.map(t, jac);
    std::array<double, N> y = f(x);
    for (std::size_t k = 0; k < N; ++k) {
      const double v = y[k] * jac;
      y[k] = std::isfinite(v) ? v : 0.0;
    }
    return y;
  };
  samples[7] = eval(centre);
  for (std::size_t k = 0; k < N; ++k) {
    kronrod[k] = samples[7][k] * kKronrodWeights[7];
    gauss[k] = samples[7][k] * kGaussWeights[3];
  }
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    samples[j] = eval(centre - dx);
    samples[14 - j] = eval(centre + dx);
    for (std::size_t k = 0; k < N; ++k) {
      const double pair = samples[j][k] + samples[14 - j][k];
      kronrod[k] += kKronrodWeights[j] * pair;
      if (j % 2 == 1) gauss[k] += kGaussWeights[j / 2] * pair;
    }
  }
  for (std::size_t k = 0; k < N; ++k) {
    const double mean = kronrod[k] * 0.5;
    double asc = kKronrodWeights[7] * std::abs(samples[7][k] - mean);
    for (std::size_t j = 0; j < 7; ++j)
      asc += kKronrodWeights[j] * (std::abs(samples[j][k] - mean) + std::abs(samples[14 - j][k] - mean));
    asc *= half;
    double err = std::abs((kronrod[k] - gauss[k]) * half);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    iv.value[k] = kronrod[k] * half;
    iv.error[k] = err;
  }
}

}  // namespace detail

// Integrates f over the ordered breakpoints; the first may be -inf and the
// last +inf. Interior breakpoints seed the subdivision (peaks, kinks,
// integrable singularities) and must be finite.
template <std::size_t N, class F>
QuadResult<N> integrate(const F& f, std::span<const double> breakpoints, const QuadConfig& cfg) {
  using detail::Segment;
  if (breakpoints.size() < 2) throw InvalidParameter("integrate: need at least two breakpoints");
  std::vector<Segment> segments;
  const double span_hint = [&] {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double x : breakpoints)
      if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
    const double width = hi > lo ? hi - lo : 0.0;
    return std::max({width, std::abs(lo), std::abs(hi), 1e-300});
  }();
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double a = breakpoints[i];
    const double b = breakpoints[i + 1];
    if (!(a < b)) continue;
    Segment seg;
    if (std::isinf(a) && std::isinf(b)) {
      throw InvalidParameter("integrate: a doubly infinite range needs a finite breakpoint");
    } else if (std::isinf(b)) {
      seg.kind = Segment::Kind::upper_tail;
      seg.a = a;
      seg.scale = span_hint;
    } else if (std::isinf(a)) {
      seg.kind = Segment::Kind::lower_tail;
      seg.a = b;
      seg.scale = span_hint;
    } else {
      seg.a = a;
      seg.b = b;
    }
    segments.push_back(seg);
  }

  std::priority_queue<detail::Interval<N>> heap;
  std::array<double, N> total{};
  std::array<double, N> total_err{};
  auto push = [&](detail::Interval<N> iv) {
    detail::gauss_kronrod<N>(f, segments[iv.segment], iv);
    for (std::size_t k = 0; k < N; ++k) {
      total[k] += iv.value[k];
      total_err[k] += iv.error[k];
    }
    iv.priority = 0.0;
    for (std::size_t k = 0; k < N; ++k)
      iv.priority = std::max(iv.priority, iv.error[k] / std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total[k])));
    heap.push(iv);
  };
  for (std::size_t s = 0; s < segments.size(); ++s) {
    detail::Interval<N> iv;
    iv.segment = s;
    iv.lo = segments[s].lo();
    iv.hi = segments[s].hi();
    push(iv);
  }
  auto satisfied = [&] {
    for (std::size_t k = 0; k < N; ++k)
      if (total_err[k] > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total[k]))) return false;
    return true;
  };
  auto reprioritise = [&] {
    std::vector<detail::Interval<N>> all;
    all.reserve(heap.size());
    while (!heap.empty()) {
      all.push_back(heap.top());
      heap.pop();
    }
    for (auto& iv : all) {
      double pr = 0.0;
      for (std::size_t k = 0; k < N; ++k)
        pr = std::max(pr, iv.error[k] / std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total[k])));
      iv.priority = pr;
      heap.push(iv);
    }
  };
  reprioritise();

  int subdivisions = 0;
  int since_reprioritise = 0;
  while (!satisfied()) {
    if (subdivisions >= cfg.max_subdivisions) {
      double worst_ratio = 0.0;
      for (std::size_t k = 0; k < N; ++k)
        worst_ratio = std::max(worst_ratio, total_err[k] / std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total[k])));
      throw QuadratureError("integrate: subdivision budget of " + std::to_string(cfg.max_subdivisions) +
                            " exhausted with error " + std::to_string(worst_ratio) + "x the tolerance");
    }
    detail::Interval<N> worst = heap.top();
    heap.pop();
    for (std::size_t k = 0; k < N; ++k) {
      total[k] -= worst.value[k];
      total_err[k] -= worst.error[k];
    }
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      // Interval cannot be split further in floating point; accept it as is.
      for (std::size_t k = 0; k < N; ++k) {
        total[k] += worst.value[k];
        worst.error[k] = 0.0;
      }
      worst.priority = 0.0;
      heap.push(worst);
      ++subdivisions;
      continue;
    }
    detail::Interval<N> left = worst, right = worst;
    left.hi = mid;
    right.lo = mid;
    push(left);
    push(right);
    ++subdivisions;
    if (++since_reprioritise >= 16) {
      // Running totals drift when large positive and negative errors cancel.
      std::fill(total.begin(), total.end(), 0.0);
      std::fill(total_err.begin(), total_err.end(), 0.0);
      std::vector<detail::Interval<N>> all;
      while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
      }
      for (auto& iv : all) {
        for (std::size_t k = 0; k < N; ++k) {
          total[k] += iv.value[k];
          total_err[k] += iv.error[k];
        }
        heap.push(iv);
      }
      reprioritise();
      since_reprioritise = 0;
    }
  }
  QuadResult<N> out;
  out.value = total;
  out.error = total_err;
  out.subdivisions = subdivisions;
  return out;
}

// Scalar convenience wrapper.
template <class F>
double integrate_scalar(const F& f, std::span<const double> breakpoints, const QuadConfig& cfg) {
  auto wrapped = [&](double x) { return std::array<double, 1>{f(x)}; };
  return integrate<1>(wrapped, breakpoints, cfg).value[0];
}

}  // namespace bgc

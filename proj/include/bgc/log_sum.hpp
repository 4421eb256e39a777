#pragma once

#include <cmath>
#include <limits>

// Signed log-magnitude numbers and a compensated accumulator over them.
// Series terms mix Gamma(>100) with p^(+-large), so magnitudes live in logs
// and only ratios to a running scale are ever exponentiated.

namespace bgc {

struct LogTerm {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;  // 0 marks an exact zero

  static LogTerm from(double x) {
    if (x == 0.0) return {};
    return {std::log(std::abs(x)), x > 0.0 ? 1 : -1};
  }
  static LogTerm from_log(double log_abs, int sign = 1) {
    if (sign == 0 || log_abs == -std::numeric_limits<double>::infinity()) return {};
    return {log_abs, sign};
  }
  bool zero() const { return sign == 0; }
  double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
  LogTerm abs() const { return {log_abs, sign == 0 ? 0 : 1}; }
};

inline LogTerm operator*(LogTerm a, LogTerm b) {
  if (a.zero() || b.zero()) return {};
  return {a.log_abs + b.log_abs, a.sign * b.sign};
}

inline LogTerm operator/(LogTerm a, LogTerm b) { return a * LogTerm{-b.log_abs, b.sign}; }

// Neumaier summation on a floating scale; also tracks the sum of magnitudes
// for the condition number sum|t| / |sum t|.
class LogSum {
 public:
  void add(LogTerm t) { add(t, t.abs()); }

  // bound: magnitude sum of the expanded terms t stands for (>= |t|).
  void add(LogTerm t, LogTerm bound) {
    if (!bound.zero()) rescale(bound.log_abs);
    if (t.zero()) {
      if (!bound.zero()) abs_ += std::exp(bound.log_abs - scale_);
      return;
    }
    rescale(t.log_abs);
    const double x = t.sign * std::exp(t.log_abs - scale_);
    const double s = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - s) + x;
    else
      comp_ += (x - s) + sum_;
    sum_ = s;
    abs_ += std::exp((bound.zero() ? t.log_abs : bound.log_abs) - scale_);
  }

  void add(const LogSum& other) {
    if (other.scale_ == -std::numeric_limits<double>::infinity()) return;
    add(LogTerm::from(other.sum_ + other.comp_) * LogTerm{other.scale_, 1}, LogTerm{other.scale_ + std::log(other.abs_), 1});
  }

  LogTerm total() const {
    const double s = sum_ + comp_;
    if (s == 0.0) return {};
    return {std::log(std::abs(s)) + scale_, s > 0.0 ? 1 : -1};
  }
  LogTerm abs_total() const {
    if (abs_ == 0.0) return {};
    return {std::log(abs_) + scale_, 1};
  }
  // sum|t| / |sum t|; infinity for an exact cancellation to zero.
  double condition() const {
    const double s = std::abs(sum_ + comp_);
    if (abs_ == 0.0) return 1.0;
    return s == 0.0 ? std::numeric_limits<double>::infinity() : abs_ / s;
  }

 private:
  void rescale(double log_abs) {
    if (log_abs <= scale_) return;
    if (scale_ != -std::numeric_limits<double>::infinity()) {
      const double f = std::exp(scale_ - log_abs);
      sum_ *= f;
      comp_ *= f;
      abs_ *= f;
    }
    scale_ = log_abs;
  }

  double scale_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  double comp_ = 0.0;
  double abs_ = 0.0;
};

}  // namespace bgc

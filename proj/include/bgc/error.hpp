#pragma once

#include <stdexcept>
#include <string>

namespace bgc {

// Every failure the library raises derives from Error; the CLI maps the
// concrete type to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function (x <= 0 for log_gamma, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Distribution or model parameters violating their invariants.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// A series hit its term cap, lost too much precision, or left its convergence region.
class SeriesError : public Error {
 public:
  using Error::Error;
};

// Adaptive quadrature exhausted its subdivision budget.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

// Floating-point failure: underflowed marginal, non-finite result, unrepresentable mapping.
class NumericError : public Error {
 public:
  using Error::Error;
};

class UnsupportedMethod : public Error {
 public:
  using Error::Error;
};

class DataFormatError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace bgc

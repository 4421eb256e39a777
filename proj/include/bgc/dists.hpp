#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

// Component distributions of the convolution models and the model catalog.
// Signal is always the first slot, noise the second.

namespace bgc {

struct GBParams {
  double a = 1.0;  // shape power
  double c = 1.0;  // 0 = first kind, 1 = second kind
  double d = 1.0;  // scale
  double u = 1.0;
  double v = 1.0;

  void validate() const;
};

struct NormalParams {
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const;
};

struct ExpParams {
  double theta = 1.0;  // rate

  void validate() const;
};

// Scale parameterisation; from_rate converts the rate form f(s) ∝ s^(α-1) e^(-θ s).
struct GammaParams {
  double alpha = 1.0;
  double beta = 1.0;

  static GammaParams from_rate(double alpha, double theta);
  void validate() const;
};

struct LognormalParams {
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const;
};

using Dist = std::variant<ExpParams, NormalParams, GammaParams, LognormalParams, GBParams>;

// Exp-normal is shared by two correctors: RMA integrates the signal over
// (0, p) (noise truncated at zero), MBCB over (0, inf).
enum class ExpNormalBound { observed, unbounded };

struct ExpNormal {
  ExpParams signal;
  NormalParams noise;
  ExpNormalBound bound = ExpNormalBound::observed;
};
struct ExpGamma {
  ExpParams signal;
  GammaParams noise;
};
struct GammaNormal {
  GammaParams signal;
  NormalParams noise;
};
struct ExpLognormal {
  ExpParams signal;
  LognormalParams noise;
};
struct GammaLognormal {
  GammaParams signal;
  LognormalParams noise;
};
struct GBGB {
  GBParams signal;
  GBParams noise;
};
// Noise is normal restricted to b > 0 (not renormalised); requires mu > 0.
struct GBNormal {
  GBParams signal;
  NormalParams noise;
};

using ModelSpec = std::variant<ExpNormal, ExpGamma, GammaNormal, ExpLognormal, GammaLognormal, GBGB, GBNormal>;

enum class Component { signal, noise };

Dist signal_of(const ModelSpec& m);
Dist noise_of(const ModelSpec& m);
Dist component_of(const ModelSpec& m, Component c);
void validate(const Dist& d);
void validate(const ModelSpec& m);

// Noise of these models is integrated only over b > 0, so s < p.
bool noise_truncated_at_zero(const ModelSpec& m);

double gb_log_pdf(double x, const GBParams& p);
double gb_pdf(double x, const GBParams& p);
double gb_support_upper(const GBParams& p);
GBParams gb_from_gamma(const GammaParams& g, double v_big);
GBParams gb_from_lognormal(const LognormalParams& l, double v_big, double a_small);

double log_pdf(double x, const Dist& d);
double pdf(double x, const Dist& d);
double pdf(double x, const ModelSpec& m, Component c);

double support_lower(const Dist& d);
double support_upper(const Dist& d);

// Points where the density has its bulk, peaks or kinks; used to seed quadrature.
std::vector<double> landmarks(const Dist& d);

// Mean and variance where available in closed form (GB: by quadrature).
double mean(const Dist& d);
double variance(const Dist& d);

std::vector<double> sample(const Dist& d, std::size_t n, std::uint64_t seed);
std::vector<double> sample(const ModelSpec& m, Component c, std::size_t n, std::uint64_t seed);
double draw(const Dist& d, std::mt19937_64& rng);

std::string family_name(const Dist& d);

}  // namespace bgc

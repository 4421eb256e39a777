#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "bgc/error.hpp"
#include "bgc/simulate.hpp"
#include "doctest.h"

using namespace bgc;

namespace {

const ExpNormal kExpNormal{{0.01}, {100, 15}, ExpNormalBound::observed};

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / x.size();
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

}  // namespace

TEST_CASE("simulation is reproducible and additive") {
  const auto a = simulate_experiment(kExpNormal, 1000, 100, 42);
  const auto b = simulate_experiment(kExpNormal, 1000, 100, 42);
  CHECK(a.observed == b.observed);
  CHECK(a.true_signal == b.true_signal);
  CHECK(a.negatives == b.negatives);
  CHECK(simulate_experiment(kExpNormal, 1000, 100, 43).observed != a.observed);
  CHECK(a.observed.size() == 1000);
  CHECK(a.negatives.size() == 100);
  for (std::size_t i = 0; i < a.observed.size(); ++i) CHECK(a.observed[i] > a.true_signal[i]);
}

TEST_CASE("sample moments match the model") {
  const std::size_t n = 10000;
  const auto d = simulate_experiment(kExpNormal, n, n, 7);
  // var(P) = 1/theta^2 + sigma^2
  const double sd_p = std::sqrt(1e4 + 225);
  CHECK(std::abs(mean_of(d.observed) - 200) <= 3 * sd_p / std::sqrt(double(n)));
  // var of the sample variance for a normal: 2 sigma^4 / (n - 1)
  CHECK(std::abs(var_of(d.negatives) - 225) <= 3 * std::sqrt(2.0 * 225 * 225 / (n - 1)));
}

TEST_CASE("mse report identities") {
  const auto d = simulate_experiment(kExpNormal, 2000, 100, 8);
  const auto exact = benchmark_mse(d, d.true_signal);
  CHECK(exact.mse == 0.0);
  CHECK(exact.bias == 0.0);
  for (double m : exact.decile_mse) CHECK(m == 0.0);

  double b2 = 0.0, b1 = 0.0;
  for (std::size_t i = 0; i < d.observed.size(); ++i) {
    const double b = d.observed[i] - d.true_signal[i];
    b2 += b * b;
    b1 += b;
  }
  const auto none = benchmark_mse(d, d.observed);
  CHECK(none.mse == doctest::Approx(b2 / d.observed.size()).epsilon(1e-12));
  CHECK(none.bias == doctest::Approx(b1 / d.observed.size()).epsilon(1e-12));

  std::vector<double> short_output(10, 1.0);
  CHECK_THROWS_AS(benchmark_mse(d, short_output), InvalidParameter);
}

TEST_CASE("naive subtraction floors at one") {
  const std::vector<double> p{50, 150, 300};
  const std::vector<double> b{90, 110};
  const auto n = naive_correct(p, b);
  CHECK(n[0] == 1.0);
  CHECK(n[1] == 50.0);
  CHECK(n[2] == 200.0);
}

TEST_CASE("the model-matched corrector beats naive subtraction") {
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto d = simulate_experiment(kExpNormal, 10000, 1000, seed);
    const auto r = compare_correctors(d);
    if (r[0].report.mse < r[1].report.mse) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("report layout") {
  const auto d = simulate_experiment(kExpNormal, 500, 50, 9);
  const auto r = compare_correctors(d);
  REQUIRE(r.size() == 3);
  CHECK(r[0].method == "rma");
  CHECK(r[1].method == "naive");
  CHECK(r[2].method == "identity");
  std::ostringstream out;
  write_mse_report(out, r);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "method\tmse\tbias\tdecile_1\tdecile_2\tdecile_3\tdecile_4\tdecile_5\tdecile_6\tdecile_7\tdecile_8\tdecile_9\t"
        "decile_10");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 3);
}

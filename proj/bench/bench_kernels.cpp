// Parallel kernels against their serial references: per-gene correction and
// the log-likelihood. Prints timings and the largest disagreement.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "bgc/correct.hpp"
#include "bgc/estimate.hpp"
#include "bgc/model_io.hpp"
#include "bgc/simulate.hpp"

using namespace bgc;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t genes = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 3;
  std::printf("threads\t%d\n", omp_get_max_threads());
  std::printf("kernel\tmodel\tgenes\tserial_s\tparallel_s\tspeedup\tmax_abs_diff\n");

  const std::vector<std::string> models = {
      "rma:theta=0.01,mu=100,sigma=15",
      "exp-gamma:theta=0.01,alpha=20,beta=5",
      "exp-lognormal:theta=0.01,mu=4.605170185988092,sigma=0.15",
      "gamma-normal:alpha=2,beta=50,mu=100,sigma=15",
  };
  for (const auto& text : models) {
    const ModelSpec m = parse_model(text);
    const SimDataset d = simulate_experiment(m, genes, 1000, 7);
    std::vector<double> obs;
    for (double p : d.observed)
      if (p > 0.0) obs.push_back(p);
    const std::string name = kind_name(kind_of(m));

    ArrayCorrection a, b;
    const double ts = seconds([&] { a = correct_array_serial(obs, m); }, reps);
    const double tp = seconds([&] { b = correct_array(obs, m); }, reps);
    double diff = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
    std::printf("correct_array\t%s\t%zu\t%.4f\t%.4f\t%.2f\t%.3g\n", name.c_str(), obs.size(), ts, tp, ts / tp, diff);

    EstimationProblem pr;
    pr.observed = obs;
    pr.negatives = d.negatives;
    pr.kind = kind_of(m);
    double ls = 0.0, lp = 0.0;
    const double us = seconds([&] { ls = loglik_serial(m, pr); }, reps);
    const double up = seconds([&] { lp = loglik(m, pr); }, reps);
    std::printf("loglik\t%s\t%zu\t%.4f\t%.4f\t%.2f\t%.3g\n", name.c_str(), obs.size(), us, up, us / up, std::abs(ls - lp));
  }
  return 0;
}

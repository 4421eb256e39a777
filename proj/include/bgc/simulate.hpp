#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bgc/correct.hpp"
#include "bgc/dists.hpp"

// Synthetic arrays with known true signal, and MSE scoring of correctors.

namespace bgc {

struct SimDataset {
  std::vector<double> observed;     // S + B
  std::vector<double> true_signal;  // S
  std::vector<double> negatives;    // B0, independent of B
  ModelSpec model;
  std::uint64_t seed = 0;
};

// Signal, noise and control draws come from separate streams of one seed.
SimDataset simulate_experiment(const ModelSpec& m, std::size_t genes, std::size_t controls, std::uint64_t seed);

struct MseReport {
  double mse = 0.0;
  double bias = 0.0;
  std::array<double, 10> decile_mse{};  // genes ranked by true signal
};

MseReport benchmark_mse(const SimDataset& d, std::span<const double> corrected);

// max(p - mean(negatives), floor)
std::vector<double> naive_correct(std::span<const double> observed, std::span<const double> negatives,
                                  double floor = 1.0);

struct NamedReport {
  std::string method;
  MseReport report;
};

// Model-matched corrector at the true parameters, naive subtraction, identity.
std::vector<NamedReport> compare_correctors(const SimDataset& d, const CorrectConfig& cfg = {});

// Columns: method, mse, bias, decile_1 .. decile_10.
void write_mse_report(std::ostream& out, const std::vector<NamedReport>& reports);

}  // namespace bgc

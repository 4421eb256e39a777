#include "bgc/simulate.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "bgc/error.hpp"
#include "bgc/model_io.hpp"

namespace bgc {

namespace {

std::vector<double> stream(const Dist& d, std::size_t n, std::uint64_t seed, std::uint32_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  std::mt19937_64 rng(seq);
  std::vector<double> out(n);
  for (auto& x : out) x = draw(d, rng);
  return out;
}

}  // namespace

SimDataset simulate_experiment(const ModelSpec& m, std::size_t genes, std::size_t controls, std::uint64_t seed) {
  validate(m);
  if (genes < 1 || controls < 1) throw InvalidParameter("simulate_experiment: need at least one gene and one control");
  SimDataset d;
  d.model = m;
  d.seed = seed;
  const Dist noise = noise_of(m);
  d.true_signal = stream(signal_of(m), genes, seed, 1);
  const auto b = stream(noise, genes, seed, 2);
  d.negatives = stream(noise, controls, seed, 3);
  d.observed.resize(genes);
  for (std::size_t i = 0; i < genes; ++i) d.observed[i] = d.true_signal[i] + b[i];
  return d;
}

MseReport benchmark_mse(const SimDataset& d, std::span<const double> corrected) {
  const std::size_t n = d.true_signal.size();
  if (corrected.size() != n)
    throw InvalidParameter("benchmark_mse: " + std::to_string(corrected.size()) + " corrected values for " +
                           std::to_string(n) + " genes");
  if (n == 0) throw InvalidParameter("benchmark_mse: empty dataset");
  MseReport r;
  double se = 0.0, e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double err = corrected[i] - d.true_signal[i];
    se += err * err;
    e += err;
  }
  r.mse = se / n;
  r.bias = e / n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d.true_signal[a] < d.true_signal[b]; });
  for (std::size_t k = 0; k < 10; ++k) {
    const std::size_t lo = k * n / 10, hi = (k + 1) * n / 10;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double err = corrected[order[i]] - d.true_signal[order[i]];
      s += err * err;
    }
    r.decile_mse[k] = hi > lo ? s / (hi - lo) : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::vector<double> naive_correct(std::span<const double> observed, std::span<const double> negatives, double floor) {
  if (negatives.empty()) throw InvalidParameter("naive_correct: no negative controls");
  const double m0 = std::accumulate(negatives.begin(), negatives.end(), 0.0) / negatives.size();
  std::vector<double> out(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) out[i] = std::max(observed[i] - m0, floor);
  return out;
}

std::vector<NamedReport> compare_correctors(const SimDataset& d, const CorrectConfig& cfg) {
  const auto model = correct_array(d.observed, d.model, cfg);
  if (model.failed)
    throw NumericError("compare_correctors: " + std::to_string(model.failed) + " genes could not be corrected");
  std::vector<NamedReport> out;
  out.push_back({kind_name(kind_of(d.model)), benchmark_mse(d, model.values)});
  out.push_back({"naive", benchmark_mse(d, naive_correct(d.observed, d.negatives))});
  out.push_back({"identity", benchmark_mse(d, d.observed)});
  return out;
}

void write_mse_report(std::ostream& out, const std::vector<NamedReport>& reports) {
  out << "method\tmse\tbias";
  for (int k = 1; k <= 10; ++k) out << "\tdecile_" << k;
  out << '\n';
  for (const auto& r : reports) {
    out << r.method << '\t' << format_double(r.report.mse) << '\t' << format_double(r.report.bias);
    for (double v : r.report.decile_mse) out << '\t' << format_double(v);
    out << '\n';
  }
}

}  // namespace bgc

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bgc/commands.hpp"
#include "bgc/correct.hpp"
#include "bgc/error.hpp"
#include "bgc/model_io.hpp"
#include "bgc/tsv.hpp"
#include "doctest.h"

using namespace bgc;
namespace fs = std::filesystem;

namespace {

const std::string kExpNormal = "rma:theta=0.01,mu=100,sigma=15";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bgc_test_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

RunOptions quiet(int threads = 1) {
  RunOptions o;
  o.threads = threads;
  o.config = std::nullopt;
  return o;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(BGC_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("fit two simulated arrays") {
  const auto dir = scratch("fit2");
  REQUIRE(cmd_simulate(kExpNormal, 5000, 1000, 2, dir.string(), quiet()) == kExitOk);
  const auto obs = (dir / "observed.tsv").string(), neg = (dir / "negatives.tsv").string();
  const auto out = (dir / "fit.tsv").string();
  CHECK(cmd_fit(obs, neg, "rma", "mle", out, quiet()) == kExitOk);
  std::ifstream in(out);
  const auto fits = read_fit_table(in, out);
  REQUIRE(fits.size() == 2);
  for (const auto& [array, m] : fits) {
    const auto v = param_values(m);
    CHECK(std::abs(v[0] / 0.01 - 1) <= 0.1);
    CHECK(std::abs(v[1] / 100 - 1) <= 0.1);
    CHECK(std::abs(v[2] / 15 - 1) <= 0.1);
  }

  // same inputs, same bytes
  const auto again = (dir / "fit_again.tsv").string();
  CHECK(cmd_fit(obs, neg, "rma", "mle", again, quiet()) == kExitOk);
  CHECK(slurp(out) == slurp(again));

  CHECK_THROWS_AS(cmd_fit(obs, neg, "gb-gb", "moments", out, quiet()), UnsupportedMethod);
  CHECK(run_binary("fit --observed " + obs + " --negatives " + neg + " --model gb-gb --method moments --out " +
                   (dir / "x.tsv").string()) == kExitUnsupported);
}

TEST_CASE("correct with the symmetric truncation construction") {
  const auto obs = scratch("half_obs.tsv"), neg = scratch("half_neg.tsv"), out = scratch("half_out.tsv");
  const double p = 80, theta = 0.02, sigma = 6;
  const double mu = p / 2 - sigma * sigma * theta;
  write_file(obs, "ProbeID\tA1\nq1\t80\nq2\t120\nq3\t35\n");
  write_file(neg, "ProbeID\tA1\nn1\t30\nn2\t40\n");
  const std::string model = format_model(ExpNormal{{theta}, {mu, sigma}, ExpNormalBound::observed});
  REQUIRE(cmd_correct(obs.string(), neg.string(), model, out.string(), "", quiet()) == kExitOk);
  const auto t = read_table_file(out.string(), false);
  CHECK(t.ids == std::vector<std::string>{"q1", "q2", "q3"});
  CHECK(t.values[0][0] == doctest::Approx(p / 2).epsilon(1e-12));
}

TEST_CASE("corrected values stay inside (0, p) for positive noise") {
  const auto dir = scratch("range");
  const std::string model = "exp-gamma:theta=0.01,alpha=20,beta=5";
  REQUIRE(cmd_simulate(model, 2000, 200, 1, dir.string(), quiet()) == kExitOk);
  const auto out = dir / "corrected.tsv", diag = dir / "diag.tsv";
  REQUIRE(cmd_correct((dir / "observed.tsv").string(), (dir / "negatives.tsv").string(), model, out.string(),
                      diag.string(), quiet()) == kExitOk);
  const auto o = read_table_file((dir / "observed.tsv").string());
  const auto c = read_table_file(out.string(), false);
  int outside = 0;
  for (std::size_t i = 0; i < o.rows(); ++i)
    if (!(c.values[0][i] > 0 && c.values[0][i] < o.values[0][i])) ++outside;
  CHECK(outside == 0);
  std::ifstream d(diag);
  std::string header;
  std::getline(d, header);
  CHECK(header == "ProbeID\tarray\tpath\tfallback\terror");
}

TEST_CASE("simulate, correct and benchmark reproduce the simulation report") {
  const auto dir = scratch("roundtrip");
  REQUIRE(cmd_simulate(kExpNormal, 3000, 300, 1, dir.string(), quiet()) == kExitOk);
  const auto out = dir / "corrected.tsv", bench = dir / "bench.tsv";
  REQUIRE(cmd_correct((dir / "observed.tsv").string(), (dir / "negatives.tsv").string(), kExpNormal, out.string(), "",
                      quiet()) == kExitOk);
  REQUIRE(cmd_benchmark((dir / "truth.tsv").string(), out.string(), "rma", bench.string()) == kExitOk);
  std::istringstream report(slurp(dir / "report.tsv")), mine(slurp(bench));
  std::string h1, h2, r1, r2;
  std::getline(report, h1);
  std::getline(report, r1);
  std::getline(mine, h2);
  std::getline(mine, r2);
  CHECK(h1 == h2);
  CHECK(r1 == r2);
}

TEST_CASE("simulate is byte-identical across runs and thread counts") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  REQUIRE(cmd_simulate(kExpNormal, 500, 50, 3, a.string(), quiet(1)) == kExitOk);
  REQUIRE(cmd_simulate(kExpNormal, 500, 50, 3, b.string(), quiet(4)) == kExitOk);
  for (const char* f : {"observed.tsv", "negatives.tsv", "truth.tsv", "report.tsv"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("validate against the oracle") {
  const auto out = scratch("validate.tsv");
  CHECK(cmd_validate("rma", 100, out.string(), quiet()) == kExitOk);
  CHECK(cmd_validate("gb-gb", 100, out.string(), quiet()) == kExitOk);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header == "draw\tmodel\tp\tcorrected\toracle\trel_error\tpath\tok");
  CHECK_THROWS_AS(cmd_validate("normexp", 10, out.string(), quiet()), UsageError);
  CHECK(run_binary("validate --model normexp --draws 3") == kExitUsage);
  CHECK(run_binary("frobnicate") == kExitUsage);
}

TEST_CASE("data errors map to their exit status") {
  const auto obs = scratch("bad_obs.tsv"), neg = scratch("bad_neg.tsv");
  write_file(obs, "ProbeID\tA1\nq1\t80\nq2\t-3\n");
  write_file(neg, "ProbeID\tA1\nn1\t30\nn2\t40\n");
  CHECK(run_binary("correct --observed " + obs.string() + " --negatives " + neg.string() + " --model " + kExpNormal) ==
        kExitData);
}

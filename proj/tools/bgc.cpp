// bgc: background correction of bead-array intensities.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "bgc/commands.hpp"
#include "bgc/error.hpp"

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out = "-";

  bgc::RunOptions options() const {
    bgc::RunOptions o;
    if (!config.empty()) o.config = config;
    o.seed = seed;
    o.threads = threads;
    return o;
  }
};

void add_common(CLI::App* cmd, Common& c, bool out_is_dir = false) {
  cmd->add_option("--config", c.config, "key=value settings file (default: $BGC_CONFIG if set)");
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_option("--threads", c.threads, "worker threads, 0 for one per processor")->capture_default_str();
  if (out_is_dir)
    cmd->add_option("--out", c.out, "output directory")->required();
  else
    cmd->add_option("--out", c.out, "output file, - for standard output")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Background correction of bead-array intensities with convolution models"};
  app.require_subcommand(1);

  Common common;
  std::string observed, negatives, model, method = "mle", params, diagnostics, truth, corrected, label = "corrected";
  std::size_t genes = 0, controls = 0, arrays = 1;
  int draws = 100;

  auto* fit = app.add_subcommand("fit", "estimate model parameters per array");
  fit->add_option("--observed", observed, "regular-probe intensity table")->required();
  fit->add_option("--negatives", negatives, "negative-control intensity table")->required();
  fit->add_option("--model", model, "model family (rma, mbcb, exp-gamma, gamma-normal, exp-lognormal, "
                                    "gamma-lognormal, gb-gb, gb-normal)")->required();
  fit->add_option("--method", method, "mle, moments or plugin")->capture_default_str();
  add_common(fit, common);

  auto* corr = app.add_subcommand("correct", "background-correct every array");
  corr->add_option("--observed", observed, "regular-probe intensity table")->required();
  corr->add_option("--negatives", negatives, "negative-control intensity table")->required();
  auto* by_table = corr->add_option("--params", params, "fit table written by 'bgc fit'");
  auto* by_model = corr->add_option("--model", model, "inline parameters for every array, e.g. rma:theta=0.01,mu=100,sigma=15");
  by_table->excludes(by_model);
  corr->add_option("--diagnostics", diagnostics, "per-gene evaluation path and errors");
  add_common(corr, common);

  auto* sim = app.add_subcommand("simulate", "write a synthetic dataset with known signal");
  sim->add_option("--model", model, "model with parameters, e.g. rma:theta=0.01,mu=100,sigma=15")->required();
  sim->add_option("--genes", genes, "regular probes per array")->required();
  sim->add_option("--controls", controls, "negative controls per array")->required();
  sim->add_option("--arrays", arrays, "number of arrays")->capture_default_str();
  add_common(sim, common, true);

  auto* val = app.add_subcommand("validate", "check the corrector against the quadrature oracle");
  val->add_option("--model", model, "model family")->required();
  val->add_option("--draws", draws, "random parameter draws")->capture_default_str();
  add_common(val, common);

  auto* bench = app.add_subcommand("benchmark", "MSE of corrected values against simulated truth");
  bench->add_option("--truth", truth, "truth.tsv from 'bgc simulate'")->required();
  bench->add_option("--corrected", corrected, "output of 'bgc correct'")->required();
  bench->add_option("--label", label, "method name in the report")->capture_default_str();
  bench->add_option("--out", common.out, "output file, - for standard output")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return bgc::kExitUsage;
  }

  try {
    const auto opt = common.options();
    if (*fit) return bgc::cmd_fit(observed, negatives, model, method, common.out, opt);
    if (*corr) {
      if (params.empty() && model.empty()) throw bgc::UsageError("correct needs --params or --model");
      return bgc::cmd_correct(observed, negatives, params.empty() ? model : params, common.out, diagnostics, opt);
    }
    if (*sim) return bgc::cmd_simulate(model, genes, controls, arrays, common.out, opt);
    if (*val) return bgc::cmd_validate(model, draws, common.out, opt);
    if (*bench) return bgc::cmd_benchmark(truth, corrected, label, common.out);
  } catch (const std::exception& e) {
    std::cerr << "bgc: " << e.what() << '\n';
    return bgc::exit_code_for(e);
  }
  return bgc::kExitUsage;
}

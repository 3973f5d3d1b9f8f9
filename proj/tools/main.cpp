#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "mlstereo/errors.hpp"
#include "mlstereo/parallel.hpp"

using namespace mlstereo;

int main(int argc, char** argv) {
  CLI::App app{"Multi-label stereo matching for transparent scenes"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  int workers = 0;
  app.add_option("--config", config_path, "Key-value config file");
  app.add_option("--set", overrides, "Override one config key (key=value); repeatable");
  app.add_option("--workers", workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  auto* gen = app.add_subcommand("gen", "Generate a procedural stereo dataset");
  std::string gen_out;
  int gen_count = 10;
  std::uint64_t gen_seed = 0;
  gen->add_option("-o,--out", gen_out, "Dataset root")->required();
  gen->add_option("-n,--count", gen_count, "Number of samples")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");

  auto* match = app.add_subcommand("match", "Estimate multi-label disparity for a pair or a dataset");
  std::string match_left, match_right, match_dataset, match_out;
  auto* left_opt = match->add_option("--left", match_left, "Left image (PNG)");
  auto* right_opt = match->add_option("--right", match_right, "Right image (PNG)");
  auto* dataset_opt = match->add_option("--dataset", match_dataset, "Dataset root; matches every sample");
  match->add_option("-o,--out", match_out, "Output directory")->required();
  left_opt->needs(right_opt);
  right_opt->needs(left_opt);
  dataset_opt->excludes(left_opt)->excludes(right_opt);

  auto* eval = app.add_subcommand("eval", "Region-wise metrics of predictions against a dataset");
  std::string eval_pred, eval_dataset, eval_out;
  eval->add_option("--pred", eval_pred, "Prediction root with one directory per sample id")->required();
  eval->add_option("--dataset", eval_dataset, "Dataset root")->required();
  eval->add_option("-o,--out", eval_out, "Report directory (default: the prediction root)");

  auto* exp = app.add_subcommand("export", "Write a labelled point cloud as ASCII PLY");
  std::string exp_pred, exp_left, exp_out;
  exp->add_option("--pred", exp_pred, "Prediction directory of one sample")->required();
  exp->add_option("--left", exp_left, "Left image used for colours")->required();
  exp->add_option("-o,--out", exp_out, "Output .ply path")->required();

  auto* selftest = app.add_subcommand("selftest", "Run built-in oracle checks");
  cli::SelftestOptions selftest_opts;
  selftest->add_flag("--inject-gradient-fault", selftest_opts.inject_gradient_fault,
                     "Debug: perturb the analytic NLL gradient so its check fails");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kValidation;
  }

  try {
    set_worker_count(workers);
    config::RunConfig cfg;
    if (!config_path.empty()) cfg = config::load(config_path);
    for (const auto& o : overrides) config::apply_override(cfg, o);
    config::validate(cfg);

    if (gen->parsed()) return cli::cmd_gen(cfg, gen_out, gen_count, gen_seed);
    if (match->parsed()) {
      if (!match_dataset.empty()) return cli::cmd_match_dataset(cfg, match_dataset, match_out);
      if (match_left.empty()) throw std::invalid_argument("match: give --left/--right or --dataset");
      return cli::cmd_match(cfg, match_left, match_right, match_out);
    }
    if (eval->parsed()) return cli::cmd_eval(cfg, eval_pred, eval_dataset, eval_out.empty() ? eval_pred : eval_out);
    if (exp->parsed()) return cli::cmd_export(cfg, exp_pred, exp_left, exp_out);
    if (selftest->parsed()) return cli::cmd_selftest(selftest_opts);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kValidation;
  }
  return cli::kValidation;
}

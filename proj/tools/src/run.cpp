#include <iostream>

#include <CLI11.hpp>

#include "csynth_tools/commands.hpp"

namespace csynth::cli {

int run(int argc, char** argv) {
  CLI::App app{"csynth: synthetic commodity paths and deep hedging experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool no_filter = false;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed, "override the experiment seed");
  app.add_option("--out", out, "output directory of this command");
  app.add_flag("--no-filter", no_filter, "disable the jump filter");

  auto* preprocess = app.add_subcommand("preprocess", "jump-filter and windowize the price data");
  auto* train = app.add_subcommand("train-gen", "train the configured generator");
  auto* eval = app.add_subcommand("eval-gen", "compare generator samples with the data windows");
  auto* hedge = app.add_subcommand("hedge", "train and evaluate a deep hedger on generator samples");
  auto* report = app.add_subcommand("report", "join reports of several runs");
  std::vector<std::string> runs;
  report->add_option("runs", runs, "run directories or report files")->required();
  for (auto* sub : {preprocess, train, eval, hedge, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  std::filesystem::path dir;
  try {
    const std::optional<std::filesystem::path> out_dir =
        out.empty() ? std::nullopt : std::optional<std::filesystem::path>(out);
    if (out_dir) dir = *out_dir;
    if (report->parsed()) {
      dir = out_dir.value_or("report");
      cmd_report(std::vector<std::filesystem::path>(runs.begin(), runs.end()), dir);
      return kExitOk;
    }
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (seed) cfg.set_seed(*seed);
    if (no_filter) cfg.data.jump_filter = false;
    if (preprocess->parsed()) {
      dir = command_dir(cfg, "preprocess", out_dir);
      cmd_preprocess(cfg, dir);
    } else if (train->parsed()) {
      dir = command_dir(cfg, "train-gen", out_dir);
      cmd_train_gen(cfg, dir);
    } else if (eval->parsed()) {
      dir = command_dir(cfg, "eval-gen", out_dir);
      cmd_eval_gen(cfg, dir);
    } else if (hedge->parsed()) {
      dir = command_dir(cfg, "hedge", out_dir);
      cmd_hedge(cfg, dir);
    }
  } catch (const std::exception& e) {
    return report_failure(e, dir);
  }
  return kExitOk;
}

}  // namespace csynth::cli

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csynth_tools/experiment.hpp"

namespace csynth::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitOther = 1;

/// Output directory of a command: `out` when given, else <output_dir>/<command>.
[[nodiscard]] std::filesystem::path command_dir(const ExperimentConfig& cfg, const std::string& command,
                                                const std::optional<std::filesystem::path>& out);

/// preprocess: dataset.json, prices.csv
void cmd_preprocess(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// train-gen: generator.json, loss_curve.csv
void cmd_train_gen(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// eval-gen: report.csv, report_unit.csv (when unit_scale), summary.json
void cmd_eval_gen(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// hedge: hedger.json, repl_report.csv, portfolio.csv, hedge_curve.csv
void cmd_hedge(const ExperimentConfig& cfg, const std::filesystem::path& out);
/// report: comparison.csv joining the report.csv / repl_report.csv files found under `runs`.
void cmd_report(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out);

inline constexpr const char* kReplHeader = "model,case,init_risk,repl_loss";

/// Join metric reports (one column per model) or replication reports; the per-row
/// minimum is marked with '*' when there are at least two columns.
[[nodiscard]] std::string join_reports(const std::vector<std::filesystem::path>& files);

/// Exit code for the exception; writes failure.txt into `dir` when non-empty.
int report_failure(const std::exception& e, const std::filesystem::path& dir);

/// Parse argv and run one subcommand; returns the process exit code.
int run(int argc, char** argv);

}  // namespace csynth::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csynth/dataio.hpp"
#include "csynth/hedging.hpp"
#include "csynth/train_config.hpp"

namespace csynth::cli {

struct DataOptions {
  /// "bundled" for the built-in synthetic market, otherwise a CSV path.
  std::string source = "bundled";
  bool jump_filter = true;
  double quantile = 0.95;
  std::size_t window = 30;
  std::size_t stride = 1;
};

struct HedgeOptions {
  /// call, proxy or spread.
  std::string case_name = "call";
  /// Strike; unset means the case default (s0 of the underlying, or 42.41 for the spread).
  std::optional<double> strike;
  std::string underlying = "gas";
  std::string proxy = "coal";
  std::string spread_long = "coal";
  std::string spread_short = "gas";
  /// Generator checkpoint used as the sampler; empty means <output_dir>/train-gen/generator.json.
  std::string checkpoint;
  /// Compute the Black-Scholes delta baseline row for the call case.
  bool bs_baseline = true;
  hedge::HedgerConfig hedger;
};

struct MetricOptions {
  std::size_t samples = 1000;
  bool unit_scale = true;
};

struct ExperimentConfig {
  DataOptions data;
  gen::TrainConfig generator;
  HedgeOptions hedging;
  MetricOptions metrics;
  /// Experiment seed; copied into the generator and hedger configs.
  std::uint64_t seed = 7;
  std::string output_dir = "runs/default";
  /// Generator checkpoint for eval-gen; empty means <output_dir>/train-gen/generator.json.
  std::string checkpoint;

  void validate() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Content hash of the configuration without output_dir.
  [[nodiscard]] std::string hash() const;

  /// Sets the experiment seed and propagates it.
  void set_seed(std::uint64_t value);

  [[nodiscard]] std::filesystem::path generator_checkpoint() const;
  [[nodiscard]] std::filesystem::path hedge_checkpoint() const;
};

/// Price table from the configured source, jump-filtered unless disabled.
[[nodiscard]] data::PriceTable load_prices(const DataOptions& opts);
/// Unfiltered price table from the configured source.
[[nodiscard]] data::PriceTable load_raw_prices(const DataOptions& opts);
[[nodiscard]] data::PathBatch load_windows(const DataOptions& opts);

/// Hedging spec for the configured case, with s0 taken from the first table row.
[[nodiscard]] hedge::HedgingSpec make_spec(const HedgeOptions& opts, const data::PriceTable& table,
                                           std::size_t window);

/// Dataset container: the windowed batch plus its shape and labels, as JSON.
[[nodiscard]] nlohmann::ordered_json dataset_json(const data::PathBatch& batch);
[[nodiscard]] data::PathBatch dataset_from_json(const nlohmann::json& j);

}  // namespace csynth::cli

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csynth/dataio.hpp"
#include "csynth/params.hpp"
#include "csynth/stochastic.hpp"
#include "csynth/train_config.hpp"

namespace csynth::gen {

/// Per-iteration training losses. disc_loss is only filled for kinds with a discriminator.
struct LossCurve {
  std::vector<std::size_t> iteration;
  std::vector<double> gen_loss;
  std::vector<double> disc_loss;
  bool has_discriminator = false;

  void record(std::size_t iter, double gen, std::optional<double> disc = std::nullopt);
  [[nodiscard]] std::size_t size() const noexcept { return iteration.size(); }
  /// Header iteration,gen_loss,disc_loss; disc_loss left empty when absent.
  [[nodiscard]] std::string to_csv() const;

  friend bool operator==(const LossCurve&, const LossCurve&) = default;
};

struct TrainingMetadata {
  LossCurve curve;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string config_hash;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

/// Any of the five generators. Neural kinds keep weights in `params` and extra
/// fitted statistics (state scaling, initial states, regression weights) in `aux`.
struct GeneratorModel {
  Kind kind = Kind::kGbm;
  TrainConfig config;
  ad::ParamSet params;
  /// Calibrated parameters; only meaningful for Kind::kGbm.
  stoch::GbmParams gbm;
  data::Normalizer normalizer;
  std::size_t seq_len = 0;
  std::size_t dim = 0;
  double dt = data::kDailyDt;
  std::vector<std::string> labels;
  std::map<std::string, Tensor> aux;
  TrainingMetadata meta;

  /// n paths of seq_len x dim prices. Deterministic per (model, n, seed) and, for a
  /// given seed, path s never depends on n. A non-empty s0 rebases every path to start there.
  [[nodiscard]] data::PathBatch sample(std::size_t n, std::uint64_t seed,
                                       std::span<const double> s0 = {}) const;

  void validate() const;

  friend bool operator==(const GeneratorModel&, const GeneratorModel&) = default;
};

/// Called after every training iteration with (iteration, gen_loss, disc_loss).
using TrainObserver = std::function<void(std::size_t, double, std::optional<double>)>;

/// Fit the configured kind on price windows (samples x T x d). GBM is calibrated;
/// neural kinds are normalized per config and trained for cfg.iterations steps.
[[nodiscard]] GeneratorModel train_generator(const data::PathBatch& prices, const TrainConfig& cfg,
                                             const TrainObserver& observer = {});

}  // namespace csynth::gen

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "csynth/dataio.hpp"
#include "csynth/sinkhorn.hpp"

namespace csynth::gen {

enum class Kind { kGbm, kCegen, kTsgan, kCotgan, kSiggan };

[[nodiscard]] std::string_view to_string(Kind kind) noexcept;
/// Accepts the lower-case names "gbm", "cegen", "tsgan", "cotgan", "siggan".
[[nodiscard]] Kind parse_kind(std::string_view text);
[[nodiscard]] bool has_discriminator(Kind kind) noexcept;

struct TrainConfig {
  Kind kind = Kind::kCegen;
  std::size_t iterations = 2000;
  std::size_t batch_size = 128;
  std::size_t hidden = 32;
  std::size_t layers = 2;
  /// 0 means "same as the data dimension".
  std::size_t noise_dim = 0;
  double lr_generator = 1e-3;
  double lr_discriminator = 1e-3;
  double grad_clip = 10.0;
  std::uint64_t seed = 7;
  data::NormalizationMode normalization = data::NormalizationMode::kInitialValueRatio;

  // COTGAN
  loss::SinkhornConfig sinkhorn{};
  std::size_t critic_features = 4;
  double martingale_penalty = 1.0;

  // SIGGAN
  std::size_t sig_depth = 2;
  bool sig_time_augment = true;
  bool sig_lead_lag = false;
  /// Train with the unbiased estimator of the conditional signature distance.
  bool sig_unbiased = true;
  std::size_t past_sig_depth = 2;
  std::size_t past_steps = 3;
  std::size_t future_steps = 3;
  double ridge = 1e-6;
  std::size_t mc_samples = 8;

  // CEGEN
  std::size_t bins = 5;
  std::size_t bin_dim = 0;
  /// Train with the fake-variance-corrected transition loss.
  bool transition_debias = true;

  // TSGAN
  double w_reconstruction = 10.0;
  double w_supervised = 1.0;
  double w_adversarial = 1.0;
  /// Optional first/second moment matching term on generated paths.
  double w_moment = 10.0;

  /// Throws ConfigError.
  void validate() const;
  [[nodiscard]] std::size_t effective_noise_dim(std::size_t data_dim) const noexcept {
    return noise_dim == 0 ? data_dim : noise_dim;
  }

  [[nodiscard]] nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j);
  /// FNV-1a of the canonical JSON dump, as 16 hex digits.
  [[nodiscard]] std::string hash() const;
};

}  // namespace csynth::gen

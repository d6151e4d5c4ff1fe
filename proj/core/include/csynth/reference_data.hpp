#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csynth/dataio.hpp"
#include "csynth/stochastic.hpp"

namespace csynth::stoch {

/// Commodity market used for the bundled synthetic dataset: electricity, gas, oil, coal.
struct ReferenceMarket {
  std::vector<std::string> names;
  std::vector<double> s0;
  std::vector<double> sigma;
  /// Correlation matrix exactly as published (not positive semi-definite).
  Matrix published_corr;
  /// Nearest valid correlation matrix to `published_corr`; used for simulation.
  Matrix corr;

  [[nodiscard]] GbmParams gbm() const;
};

[[nodiscard]] const ReferenceMarket& reference_market();

inline constexpr std::uint64_t kReferenceSeed = 20200121;
inline constexpr std::size_t kReferenceDays = 300;

/// One correlated GBM trajectory over `days` business days starting 2020-01-21.
/// Prices are rounded to 4 decimals so the table equals its CSV serialization.
[[nodiscard]] data::PriceTable reference_price_table(std::size_t days = kReferenceDays,
                                                     std::uint64_t seed = kReferenceSeed);

/// Exponential Ornstein-Uhlenbeck: d log S = kappa (log level - log S) dt + sigma dW.
struct MeanRevertingParams {
  std::vector<double> kappa;
  std::vector<double> level;
  std::vector<double> sigma;
  Matrix corr;
  double dt = data::kDailyDt;

  [[nodiscard]] std::size_t dims() const noexcept { return sigma.size(); }
  void validate() const;
};

/// Exact OU stepping in log space; path s uses its own RNG stream.
[[nodiscard]] data::PathBatch simulate_mean_reverting(const MeanRevertingParams& params,
                                                      std::size_t n_paths, std::size_t steps,
                                                      std::span<const double> s0,
                                                      std::uint64_t seed);

}  // namespace csynth::stoch

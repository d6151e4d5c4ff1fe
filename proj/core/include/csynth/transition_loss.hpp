#pragma once

#include <cstddef>
#include <span>

#include "csynth/dataio.hpp"
#include "csynth/tape.hpp"

namespace csynth::loss {

struct TransitionBinning {
  /// Quantile bins per time step, fitted on the real batch.
  std::size_t bins = 5;
  /// Dimension whose current value selects the bin.
  std::size_t key_dim = 0;
  /// Increments are multiplied by this before taking moments.
  double increment_scale = 1.0;
  /// Subtract the estimated sampling variance of the fake bin moments (Gaussian
  /// approximation), so the minimizer is not pulled toward smaller fake variance.
  /// The result can then be slightly negative and is no longer 0 for identical batches.
  bool debias_fake = false;

  void validate(std::size_t dims) const;
};

struct TransitionInfo {
  std::size_t used_bins = 0;
  /// Bins with fewer than 2 real or fake samples.
  std::size_t skipped_bins = 0;
};

/// Bin index of `value` given ascending interior edges (upper edges inclusive).
[[nodiscard]] std::size_t bin_index(std::span<const double> edges, double value) noexcept;

/// For each step t and each bin of the current value, squared differences of
/// increment means plus increment covariance entries, averaged over used bins.
/// `fake[t]` is the n x d fake slice at step t.
ad::Var transition_moment_loss(ad::Tape& tape, const data::PathBatch& real,
                               std::span<const ad::Var> fake, const TransitionBinning& binning,
                               TransitionInfo* info = nullptr);
[[nodiscard]] double transition_moment_loss(const data::PathBatch& real,
                                            const data::PathBatch& fake,
                                            const TransitionBinning& binning,
                                            TransitionInfo* info = nullptr);

}  // namespace csynth::loss

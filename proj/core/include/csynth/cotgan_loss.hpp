#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csynth/nn.hpp"
#include "csynth/rng.hpp"
#include "csynth/sinkhorn.hpp"

namespace csynth::loss {

/// Two causal feature networks h and M. At step t each reads only x_0..x_t.
/// Both emit `features` channels per step.
class CotganCritic {
 public:
  CotganCritic() = default;
  CotganCritic(std::string prefix, std::size_t dim, std::size_t hidden, std::size_t features);

  void init(ad::ParamSet& params, Rng& rng) const;

  struct Features {
    /// n x (features * (T-1)): h_t for t = 0..T-2.
    ad::Var h;
    /// n x (features * (T-1)): M_{t+1} - M_t for t = 0..T-2.
    ad::Var dm;
  };
  Features operator()(ad::Tape& tape, const ad::ParamSet& params,
                      std::span<const ad::Var> points) const;

  [[nodiscard]] std::size_t features() const noexcept { return features_; }
  [[nodiscard]] const std::string& prefix() const noexcept { return prefix_; }

 private:
  std::string prefix_;
  std::size_t features_ = 0;
  nn::MinimalGru h_cell_;
  nn::MinimalGru m_cell_;
  nn::Dense h_head_;
  nn::Dense m_head_;
};

/// Ground cost c(x, y) = |x - y|^2 + lambda * sum_{j,t} dM_j(x)_t h_j(y)_t.
ad::Var causal_cost(ad::Tape& tape, ad::Var x, const CotganCritic::Features& fx, ad::Var y,
                    const CotganCritic::Features& fy, double lambda);

struct CotganLosses {
  ad::Var divergence;
  /// Sum over steps and features of the squared batch mean of dM on real data.
  ad::Var martingale_penalty;
  ad::Var generator_loss;
  ad::Var critic_loss;
  DivergenceInfo info;
};

/// `real` and `fake` hold one n x d point per time step. Flattened paths are
/// concatenated over time for the |x - y|^2 term.
CotganLosses cotgan_losses(ad::Tape& tape, std::span<const ad::Var> real,
                           std::span<const ad::Var> fake, const CotganCritic& critic,
                           const ad::ParamSet& critic_params, const SinkhornConfig& cfg,
                           double penalty_weight = 1.0);

}  // namespace csynth::loss

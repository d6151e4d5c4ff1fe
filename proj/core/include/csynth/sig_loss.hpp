#pragma once

#include <cstddef>
#include <span>

#include "csynth/signature.hpp"
#include "csynth/tape.hpp"
#include "csynth/tensor.hpp"

namespace csynth::loss {

/// Ridge regression of future signatures on [1, past signature].
class SignatureRegression {
 public:
  SignatureRegression() = default;

  /// features: n x Lp past signatures (intercept added internally); targets: n x Lf.
  void fit(const Tensor& features, const Tensor& targets, double ridge = 1e-6);
  [[nodiscard]] Tensor predict(const Tensor& features) const;

  [[nodiscard]] bool fitted() const noexcept { return coefficients_.size() > 0; }
  /// (Lp + 1) x Lf, first row is the intercept.
  [[nodiscard]] const Tensor& coefficients() const noexcept { return coefficients_; }
  void set_coefficients(Tensor coefficients);
  /// Mean squared L2 residual on the training set.
  [[nodiscard]] double residual() const noexcept { return residual_; }

 private:
  Tensor coefficients_;
  double residual_ = 0.0;
};

/// kMonteCarloAverage: |m - mean_k S_k|^2 exactly as written; its expectation carries an
/// extra Var(S) / K term. kUnbiased: the U-statistic mean_{k != l} <S_k - m, S_l - m>, an
/// unbiased estimate of |m - E S|^2 that may be slightly negative.
enum class SigEstimator { kMonteCarloAverage, kUnbiased };

/// Mean over pasts of |E[S(future) | past] - mean_k S(fake_{i,k})|^2.
/// `fake_points[t]` is (n * mc_samples) x d with rows i * mc_samples + k; the first
/// point is the shared start (last past value). `expected` is n x Lf.
ad::Var sig_w1_loss(ad::Tape& tape, const Tensor& expected, std::span<const ad::Var> fake_points,
                    std::size_t mc_samples, const sig::SignatureOptions& opts,
                    SigEstimator estimator = SigEstimator::kMonteCarloAverage);

/// Same quantity from precomputed fake signatures ((n * mc_samples) x Lf).
[[nodiscard]] double sig_w1_loss(const Tensor& expected, const Tensor& fake_signatures,
                                 std::size_t mc_samples,
                                 SigEstimator estimator = SigEstimator::kMonteCarloAverage);

}  // namespace csynth::loss

#include <cmath>

#include <gtest/gtest.h>

#include "csynth/cotgan_loss.hpp"
#include "csynth/errors.hpp"
#include "csynth/rng.hpp"
#include "csynth/sig_loss.hpp"
#include "csynth/stochastic.hpp"
#include "csynth/transition_loss.hpp"
#include "support/gradcheck.hpp"

namespace csynth::loss {
namespace {

using testing::random_matrix;

std::vector<Tensor> random_points(Rng& rng, std::size_t n, std::size_t steps, std::size_t d) {
  std::vector<Tensor> out;
  for (std::size_t t = 0; t < steps; ++t) out.push_back(random_matrix(rng, n, d));
  return out;
}

std::vector<ad::Var> as_constants(ad::Tape& tape, const std::vector<Tensor>& xs) {
  std::vector<ad::Var> out;
  for (const auto& x : xs) out.push_back(tape.constant(x));
  return out;
}

Tensor concat(const std::vector<Tensor>& xs) {
  ad::Tape tape;
  const auto vars = as_constants(tape, xs);
  return tape.concat_cols(vars).value();
}

SinkhornConfig converged_config() {
  SinkhornConfig cfg;
  cfg.epsilon = 0.5;
  cfg.iterations = 1000;
  cfg.tolerance = 1e-14;
  return cfg;
}

TEST(Cotgan, NoPenaltyReducesToPlainDivergence) {
  Rng rng(1);
  const auto real = random_points(rng, 8, 4, 2);
  const auto fake = random_points(rng, 8, 4, 2);
  CotganCritic critic("critic", 2, 6, 3);
  ad::ParamSet params;
  Rng init(2);
  critic.init(params, init);
  SinkhornConfig cfg;
  cfg.causal_weight = 0.0;
  ad::Tape tape;
  const auto out = cotgan_losses(tape, as_constants(tape, real), as_constants(tape, fake), critic, params, cfg);
  EXPECT_NEAR(out.generator_loss.item(), sinkhorn_divergence(concat(real), concat(fake), cfg), 1e-12);
}

TEST(Cotgan, IdenticalBatchesGiveZeroGeneratorLoss) {
  Rng rng(3);
  const auto real = random_points(rng, 10, 5, 2);
  CotganCritic critic("critic", 2, 6, 3);
  ad::ParamSet params;
  Rng init(4);
  critic.init(params, init);
  SinkhornConfig cfg;
  cfg.causal_weight = 0.0;
  ad::Tape tape;
  const auto out = cotgan_losses(tape, as_constants(tape, real), as_constants(tape, real), critic, params, cfg);
  EXPECT_LE(std::abs(out.generator_loss.item()), 1e-8);
  EXPECT_TRUE(std::isfinite(out.critic_loss.item()));
}

TEST(Cotgan, CriticFeaturesAreCausal) {
  Rng rng(5);
  auto points = random_points(rng, 4, 5, 2);
  CotganCritic critic("critic", 2, 6, 3);
  ad::ParamSet params;
  Rng init(6);
  critic.init(params, init);
  auto features = [&](const std::vector<Tensor>& xs) {
    ad::Tape tape;
    const auto f = critic(tape, params, as_constants(tape, xs));
    return std::pair{f.h.value(), f.dm.value()};
  };
  const auto [h0, dm0] = features(points);
  points[4](0, 0) += 1.0;
  const auto [h1, dm1] = features(points);
  // h_t for t <= 3 never sees x_4; dM_t = M_{t+1} - M_t sees x_4 only at t = 3.
  EXPECT_EQ(h0, h1);
  for (std::size_t c = 0; c < 3 * 3; ++c) EXPECT_EQ(dm0(0, c), dm1(0, c));
  EXPECT_NE(dm0(0, 9), dm1(0, 9));
}

TEST(Cotgan, CriticGradientMatchesFiniteDifferences) {
  Rng rng(7);
  const auto real = random_points(rng, 6, 4, 2);
  const auto fake = random_points(rng, 6, 4, 2);
  CotganCritic critic("critic", 2, 4, 2);
  ad::ParamSet params;
  Rng init(8);
  critic.init(params, init);
  auto cfg = converged_config();
  cfg.causal_weight = 1.0;
  const testing::ParamBuilder f = [&](ad::Tape& tape, const ad::ParamSet& p) {
    return cotgan_losses(tape, as_constants(tape, real), as_constants(tape, fake), critic, p, cfg).critic_loss;
  };
  EXPECT_LT(testing::param_gradient_rel_error(f, params), 1e-4);
}

TEST(Cotgan, GeneratorGradientMatchesFiniteDifferences) {
  Rng rng(9);
  const auto real = random_points(rng, 5, 3, 2);
  const auto fake = random_points(rng, 5, 3, 2);
  CotganCritic critic("critic", 2, 4, 2);
  ad::ParamSet params;
  Rng init(10);
  critic.init(params, init);
  auto cfg = converged_config();
  const testing::Builder f = [&](ad::Tape& tape, std::span<const ad::Var> xs) {
    return cotgan_losses(tape, as_constants(tape, real), xs, critic, params, cfg).generator_loss;
  };
  EXPECT_LT(testing::gradient_rel_error(f, fake), 1e-4);
}

TEST(SignatureRegression, RecoversLinearMap) {
  Rng rng(11);
  const Tensor x = random_matrix(rng, 50, 3);
  Tensor y = Tensor::matrix(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    y(i, 0) = 1.0 + 2.0 * x(i, 0) - x(i, 2);
    y(i, 1) = -0.5 + x(i, 1);
  }
  SignatureRegression reg;
  reg.fit(x, y, 1e-10);
  ASSERT_TRUE(reg.fitted());
  EXPECT_NEAR(reg.coefficients()(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(reg.coefficients()(1, 0), 2.0, 1e-6);
  EXPECT_NEAR(reg.coefficients()(3, 0), -1.0, 1e-6);
  EXPECT_LT(reg.residual(), 1e-10);
  const Tensor p = reg.predict(x);
  EXPECT_NEAR(p(7, 1), y(7, 1), 1e-6);
}

TEST(SignatureRegression, RidgeHandlesRankDeficiency) {
  Tensor x = Tensor::matrix(10, 2, 1.0);
  Tensor y = Tensor::matrix(10, 1, 3.0);
  SignatureRegression reg;
  reg.fit(x, y);
  EXPECT_TRUE(reg.coefficients().all_finite());
  EXPECT_NEAR(reg.predict(x)(0, 0), 3.0, 1e-4);
}

struct SigCase {
  Tensor expected;
  std::vector<Tensor> fake;
  sig::SignatureOptions opts{3, true, false};
};

// Pasts are random 1-d levels; the future is the last past value repeated.
SigCase copy_future_case(std::size_t n, std::size_t mc) {
  Rng rng(12);
  const sig::SignatureOptions opts{3, true, false};
  const std::size_t q = 3;
  Tensor past_sig = Tensor::matrix(n, sig::signature_length(2, 2));
  std::vector<double> last(n);
  Tensor future_sig;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor past = random_matrix(rng, 3, 1);
    last[i] = past(2, 0);
    const auto ps = sig::signature(sig::time_augment(past), 2);
    for (std::size_t c = 0; c < ps.size(); ++c) past_sig(i, c) = ps.coeffs[c];
    Tensor fut = Tensor::matrix(q + 1, 1, last[i]);
    const auto fs = sig::signature(sig::transform_path(fut, opts), opts.depth);
    if (future_sig.empty()) future_sig = Tensor::matrix(n, fs.size());
    for (std::size_t c = 0; c < fs.size(); ++c) future_sig(i, c) = fs.coeffs[c];
  }
  SignatureRegression reg;
  reg.fit(past_sig, future_sig);
  SigCase out;
  out.expected = reg.predict(past_sig);
  for (std::size_t t = 0; t <= q; ++t) {
    Tensor slice = Tensor::matrix(n * mc, 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < mc; ++k) slice(i * mc + k, 0) = last[i];
    }
    out.fake.push_back(slice);
  }
  return out;
}

double sig_loss(const SigCase& c, std::size_t mc, SigEstimator est = SigEstimator::kMonteCarloAverage) {
  ad::Tape tape;
  return sig_w1_loss(tape, c.expected, as_constants(tape, c.fake), mc, c.opts, est).item();
}

TEST(SigLoss, ExactCopiesOfDeterministicFuture) {
  const auto c = copy_future_case(20, 4);
  EXPECT_LE(sig_loss(c, 4), 1e-8);
  EXPECT_LE(std::abs(sig_loss(c, 4, SigEstimator::kUnbiased)), 1e-8);
}

TEST(SigLoss, ScalingFakeFuturesIncreasesLoss) {
  auto c = copy_future_case(20, 4);
  const double base = sig_loss(c, 4);
  for (std::size_t t = 1; t < c.fake.size(); ++t) {
    for (std::size_t r = 0; r < c.fake[t].rows(); ++r) c.fake[t](r, 0) += 0.3 * static_cast<double>(t);
  }
  const double moved = sig_loss(c, 4);
  for (auto& f : c.fake) {
    for (double& v : f.data()) v *= 2.0;
  }
  EXPECT_GT(sig_loss(c, 4), moved);
  EXPECT_GT(moved, base);
}

TEST(SigLoss, PlainOverloadMatchesTape) {
  Rng rng(13);
  const std::size_t n = 5;
  const std::size_t mc = 3;
  const Tensor expected = random_matrix(rng, n, 4);
  const Tensor sigs = random_matrix(rng, n * mc, 4);
  double avg = 0.0;
  double unbiased = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 4; ++c) {
      double mean = 0.0;
      double sq = 0.0;
      for (std::size_t k = 0; k < mc; ++k) {
        const double dk = sigs(i * mc + k, c) - expected(i, c);
        mean += dk;
        sq += dk * dk;
      }
      avg += (mean / mc) * (mean / mc);
      unbiased += (mean * mean - sq) / (mc * (mc - 1.0));
    }
  }
  EXPECT_NEAR(sig_w1_loss(expected, sigs, mc), avg / n, 1e-12);
  EXPECT_NEAR(sig_w1_loss(expected, sigs, mc, SigEstimator::kUnbiased), unbiased / n, 1e-12);
}

TEST(SigLoss, UnbiasedEstimatorHasNoVariancePenalty) {
  // Fake signatures drawn around the target: the averaged estimator stays positive
  // (variance / K), the unbiased one averages to zero.
  Rng rng(14);
  const std::size_t n = 400;
  const std::size_t mc = 4;
  const Tensor expected = random_matrix(rng, n, 3);
  Tensor sigs = Tensor::matrix(n * mc, 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < mc; ++k) {
      for (std::size_t c = 0; c < 3; ++c) sigs(i * mc + k, c) = expected(i, c) + rng.normal();
    }
  }
  EXPECT_NEAR(sig_w1_loss(expected, sigs, mc), 3.0 / mc, 0.1);
  EXPECT_NEAR(sig_w1_loss(expected, sigs, mc, SigEstimator::kUnbiased), 0.0, 0.1);
}

TEST(SigLoss, GradientMatchesFiniteDifferences) {
  Rng rng(15);
  const std::size_t n = 3;
  const std::size_t mc = 2;
  const sig::SignatureOptions opts{2, true, false};
  const Tensor expected = random_matrix(rng, n, sig::signature_length(2, 2));
  std::vector<Tensor> fake;
  for (int t = 0; t < 4; ++t) fake.push_back(random_matrix(rng, n * mc, 1));
  for (auto est : {SigEstimator::kMonteCarloAverage, SigEstimator::kUnbiased}) {
    const testing::Builder f = [&](ad::Tape& tape, std::span<const ad::Var> xs) {
      return sig_w1_loss(tape, expected, xs, mc, opts, est);
    };
    EXPECT_LT(testing::gradient_rel_error(f, fake), 1e-5);
  }
}

data::PathBatch gbm_batch(double sigma, std::size_t n, std::uint64_t seed) {
  stoch::GbmParams p{{sigma}, {0.0}, {{1.0}}, data::kDailyDt};
  const std::vector<double> s0{1.0};
  return stoch::simulate_gbm(p, n, 10, s0, seed);
}

TEST(TransitionLoss, IdenticalBatchesGiveZero) {
  const auto real = gbm_batch(0.3, 200, 1);
  const TransitionBinning binning;
  EXPECT_EQ(transition_moment_loss(real, real, binning), 0.0);
}

TEST(TransitionLoss, SingleBinIsUnconditionalMomentMatch) {
  const auto real = gbm_batch(0.3, 100, 2);
  const auto fake = gbm_batch(0.5, 80, 3);
  TransitionBinning binning;
  binning.bins = 1;
  TransitionInfo info;
  const double loss = transition_moment_loss(real, fake, binning, &info);
  EXPECT_EQ(info.used_bins, 9u);
  double expected = 0.0;
  for (std::size_t t = 0; t + 1 < 10; ++t) {
    auto moments = [t](const data::PathBatch& b) {
      double m = 0.0;
      double v = 0.0;
      for (std::size_t s = 0; s < b.samples(); ++s) m += b(s, t + 1, 0) - b(s, t, 0);
      m /= static_cast<double>(b.samples());
      for (std::size_t s = 0; s < b.samples(); ++s) {
        const double d = b(s, t + 1, 0) - b(s, t, 0) - m;
        v += d * d;
      }
      return std::pair{m, v / static_cast<double>(b.samples())};
    };
    const auto [mr, vr] = moments(real);
    const auto [mf, vf] = moments(fake);
    expected += (mf - mr) * (mf - mr) + (vf - vr) * (vf - vr);
  }
  EXPECT_NEAR(loss, expected / 9.0, 1e-15);
}

TEST(TransitionLoss, VolatilityMismatchDominatedByVariance) {
  const auto real = gbm_batch(0.2, 20000, 4);
  const auto fake = gbm_batch(0.4, 20000, 5);
  TransitionBinning binning;
  binning.bins = 1;
  const double loss = transition_moment_loss(real, fake, binning);
  // Var(S_{t+1} - S_t) = e^{sigma^2 t dt} (e^{sigma^2 dt} - 1) for s0 = 1; the sampled
  // mean difference adds (Var_f + Var_r) / n on average.
  const double dt = data::kDailyDt;
  double expected = 0.0;
  for (int t = 0; t < 9; ++t) {
    const double vr = std::exp(0.04 * t * dt) * std::expm1(0.04 * dt);
    const double vf = std::exp(0.16 * t * dt) * std::expm1(0.16 * dt);
    expected += (vf - vr) * (vf - vr) + (vf + vr) / 20000.0;
  }
  expected /= 9.0;
  EXPECT_GT(loss, 0.0);
  EXPECT_NEAR(loss / expected, 1.0, 0.1);
}

TEST(TransitionLoss, SmallBinsAreSkippedAndCounted) {
  const auto real = gbm_batch(0.3, 6, 6);
  TransitionBinning binning;
  binning.bins = 5;
  TransitionInfo info;
  (void)transition_moment_loss(real, real, binning, &info);
  EXPECT_GT(info.skipped_bins, 0u);
  EXPECT_EQ(info.used_bins + info.skipped_bins, 5u * 9u);
}

TEST(TransitionLoss, GradientMatchesFiniteDifferences) {
  const auto real = gbm_batch(0.3, 30, 7);
  Rng rng(16);
  std::vector<Tensor> fake;
  for (int t = 0; t < 10; ++t) fake.push_back(random_matrix(rng, 30, 1, 0.9, 1.1));
  TransitionBinning binning;
  binning.bins = 2;
  binning.increment_scale = 10.0;
  for (bool debias : {false, true}) {
    binning.debias_fake = debias;
    const testing::Builder f = [&](ad::Tape& tape, std::span<const ad::Var> xs) {
      return transition_moment_loss(tape, real, xs, binning);
    };
    EXPECT_LT(testing::gradient_rel_error(f, fake), 1e-4);
  }
}

TEST(TransitionLoss, DebiasedVariantRemovesFakeSamplingNoise) {
  // Fake drawn from the real law: the plain loss keeps a positive noise floor,
  // the debiased loss averages out near the real-side floor only.
  const auto real = gbm_batch(0.3, 20000, 9);
  TransitionBinning plain;
  plain.bins = 1;
  plain.increment_scale = 1.0 / std::sqrt(data::kDailyDt);
  TransitionBinning debiased = plain;
  debiased.debias_fake = true;
  double sum_plain = 0.0;
  double sum_debiased = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto fake = gbm_batch(0.3, 40, 100 + s);
    sum_plain += transition_moment_loss(real, fake, plain);
    sum_debiased += transition_moment_loss(real, fake, debiased);
  }
  EXPECT_GT(sum_plain / 20.0, 5.0 * std::abs(sum_debiased / 20.0));
}

TEST(TransitionLoss, ValidatesInputs) {
  const auto real = gbm_batch(0.3, 30, 8);
  TransitionBinning binning;
  binning.key_dim = 3;
  EXPECT_THROW((void)transition_moment_loss(real, real, binning), ConfigError);
  binning.key_dim = 0;
  binning.bins = 0;
  EXPECT_THROW((void)transition_moment_loss(real, real, binning), ConfigError);
}

}  // namespace
}  // namespace csynth::loss

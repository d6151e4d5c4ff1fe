#include <cmath>

#include <gtest/gtest.h>

#include "csynth/errors.hpp"
#include "csynth/reference_data.hpp"
#include "csynth/stochastic.hpp"

namespace csynth::stoch {
namespace {

// Reference values computed with mpmath at 40 digits.
constexpr double kAtmPrice = 0.71075950026808833699;
constexpr double kAtmDelta = 0.53436941490658067394;
constexpr double kItmPrice = 2.2503775208732237733;
constexpr double kItmDelta = 0.83286231340945267227;
constexpr double kOtmPrice = 2.9222961117413355249;
constexpr double kOtmDelta = 0.6437320815114887547;

TEST(BlackScholes, MatchesHighPrecisionOracle) {
  EXPECT_NEAR(bs_price(10.34, 10.34, 0.5, 30.0 / 252.0), kAtmPrice, 1e-12);
  EXPECT_NEAR(bs_delta(10.34, 10.34, 0.5, 30.0 / 252.0), kAtmDelta, 1e-12);
  EXPECT_NEAR(bs_price(12.0, 10.0, 0.3, 0.5), kItmPrice, 1e-12);
  EXPECT_NEAR(bs_delta(12.0, 10.0, 0.3, 0.5), kItmDelta, 1e-12);
  EXPECT_NEAR(bs_price(8.0, 10.0, 0.8, 2.0), kOtmPrice, 1e-12);
  EXPECT_NEAR(bs_delta(8.0, 10.0, 0.8, 2.0), kOtmDelta, 1e-12);
}

TEST(BlackScholes, DegenerateInputs) {
  EXPECT_DOUBLE_EQ(bs_price(12.0, 10.0, 0.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(bs_price(8.0, 10.0, 0.3, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(bs_price(8.0, 0.0, 0.3, 1.0), 8.0);
  EXPECT_DOUBLE_EQ(bs_delta(12.0, 10.0, 0.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(bs_delta(8.0, 10.0, 0.0, 1.0), 0.0);
  EXPECT_THROW((void)bs_price(-1.0, 10.0, 0.3, 1.0), std::domain_error);
  EXPECT_THROW((void)bs_price(1.0, 10.0, -0.3, 1.0), std::domain_error);
}

TEST(BlackScholes, PutCallParityBoundsAndMonotoneInVol) {
  double prev = 0.0;
  for (double vol = 0.05; vol < 2.0; vol += 0.05) {
    const double p = bs_price(10.0, 10.0, vol, 0.25);
    EXPECT_GT(p, prev);
    EXPECT_LT(p, 10.0);
    prev = p;
  }
}

TEST(Gbm, CalibrationRoundtrip) {
  const auto& m = reference_market();
  const auto params = m.gbm();
  const auto paths = simulate_gbm(params, 4000, 30, m.s0, 123, m.names);
  const auto fit = calibrate_gbm(paths);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(fit.sigma[k] / params.sigma[k], 1.0, 0.05);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(fit.corr[i][j], params.corr[i][j], 0.05);
  }
}

TEST(Gbm, MartingaleTerminalMean) {
  GbmParams p{{0.5}, {0.0}, {{1.0}}, 1.0 / 252.0};
  const std::vector<double> s0{10.0};
  const auto paths = simulate_gbm(p, 10000, 31, s0, 8);
  double mean = 0.0;
  double sq = 0.0;
  for (std::size_t s = 0; s < paths.samples(); ++s) {
    const double v = paths(s, 30, 0);
    mean += v;
    sq += v * v;
  }
  mean /= 10000.0;
  const double se = std::sqrt((sq / 10000.0 - mean * mean) / 10000.0);
  EXPECT_LT(std::abs(mean - 10.0), 3.0 * se);
}

TEST(Gbm, PathsIndependentOfBatchSize) {
  GbmParams p{{0.3, 0.2}, {0.0, 0.0}, {{1.0, 0.4}, {0.4, 1.0}}, 1.0 / 252.0};
  const std::vector<double> s0{1.0, 2.0};
  const auto small = simulate_gbm(p, 3, 10, s0, 5);
  const auto big = simulate_gbm(p, 50, 10, s0, 5);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(small.path(s), big.path(s));
}

TEST(Correlation, PublishedMatrixRepairedToNearestValid) {
  const auto& m = reference_market();
  EXPECT_LT(min_eigenvalue(m.published_corr), 0.0);
  EXPECT_GE(min_eigenvalue(m.corr), 1e-4 - 1e-9);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(m.corr[i][i], 1.0, 1e-12);
  EXPECT_THROW((void)cholesky(m.published_corr), DataError);
}

TEST(Correlation, ValidMatrixIsFixedPoint) {
  const Matrix c{{1.0, 0.3}, {0.3, 1.0}};
  const auto r = nearest_correlation(c);
  EXPECT_NEAR(r[0][1], 0.3, 1e-12);
}

TEST(GbmParams, ValidateAndJsonRoundtrip) {
  const auto p = reference_market().gbm();
  const auto q = GbmParams::from_json(p.to_json());
  EXPECT_EQ(q.sigma, p.sigma);
  EXPECT_EQ(q.corr, p.corr);
  GbmParams bad = p;
  bad.sigma[0] = -0.1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(ReferenceData, DeterministicAndPositive) {
  const auto a = reference_price_table();
  const auto b = reference_price_table();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rows(), kReferenceDays);
  EXPECT_EQ(a.dates.front().iso(), "2020-01-21");
  for (const auto& col : a.columns) {
    for (double v : col) EXPECT_GT(v, 0.0);
  }
  EXPECT_EQ(data::parse_csv(data::format_csv(a)), a);
}

TEST(MeanReverting, PullsTowardLevel) {
  MeanRevertingParams p{{5.0}, {2.0}, {0.2}, {{1.0}}, 1.0 / 252.0};
  const std::vector<double> s0{1.0};
  const auto paths = simulate_mean_reverting(p, 2000, 253, s0, 4);
  double mean_log = 0.0;
  for (std::size_t s = 0; s < paths.samples(); ++s) mean_log += std::log(paths(s, 252, 0));
  mean_log /= 2000.0;
  // E log S_1 = log 2 + (log 1 - log 2) e^{-5}
  EXPECT_NEAR(mean_log, std::log(2.0) * (1.0 - std::exp(-5.0)), 0.01);
}

TEST(BlackScholes, DeltaIsSpotDerivative) {
  const double h = 1e-5;
  for (double spot : {6.0, 9.5, 10.0, 11.0, 15.0}) {
    for (double vol : {0.1, 0.5, 1.2}) {
      const double fd = (bs_price(spot + h, 10.0, vol, 0.3) - bs_price(spot - h, 10.0, vol, 0.3)) / (2 * h);
      EXPECT_NEAR(bs_delta(spot, 10.0, vol, 0.3), fd, 1e-6);
    }
  }
}

TEST(BlackScholes, ConvexInSpot) {
  const double h = 0.05;
  for (double spot = 5.0; spot < 15.0; spot += 0.5) {
    const double second = bs_price(spot + h, 10.0, 0.4, 0.5) - 2 * bs_price(spot, 10.0, 0.4, 0.5) +
                          bs_price(spot - h, 10.0, 0.4, 0.5);
    EXPECT_GE(second, -1e-12);
  }
}

TEST(Gbm, ZeroVolatilityGivesConstantPaths) {
  GbmParams p{{0.0, 0.0}, {0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}}, 1.0 / 252.0};
  const std::vector<double> s0{3.0, 4.0};
  const auto paths = simulate_gbm(p, 5, 10, s0, 1);
  for (std::size_t s = 0; s < 5; ++s) {
    for (std::size_t t = 0; t < 10; ++t) {
      EXPECT_EQ(paths(s, t, 0), 3.0);
      EXPECT_EQ(paths(s, t, 1), 4.0);
    }
  }
  const auto fit = calibrate_gbm(paths);
  EXPECT_EQ(fit.sigma, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(fit.corr[0][1], 0.0);
  EXPECT_EQ(fit.corr[0][0], 1.0);
}

TEST(Gbm, TerminalLogMean) {
  GbmParams p{{0.5}, {0.0}, {{1.0}}, 1.0 / 252.0};
  const std::vector<double> s0{1.0};
  const auto paths = simulate_gbm(p, 10000, 31, s0, 9);
  double mean = 0.0;
  double sq = 0.0;
  for (std::size_t s = 0; s < paths.samples(); ++s) {
    const double v = std::log(paths(s, 30, 0));
    mean += v;
    sq += v * v;
  }
  mean /= 10000.0;
  const double se = std::sqrt((sq / 10000.0 - mean * mean) / 10000.0);
  EXPECT_LT(std::abs(mean + 0.125 * 30.0 / 252.0), 3.0 * se);
}

TEST(Gbm, CalibrationRejectsNonPositive) {
  data::PathBatch b(1, 3, 1);
  b(0, 0, 0) = 1.0;
  b(0, 1, 0) = 0.0;
  b(0, 2, 0) = 1.0;
  EXPECT_THROW((void)calibrate_gbm(b), DataError);
}

}  // namespace
}  // namespace csynth::stoch

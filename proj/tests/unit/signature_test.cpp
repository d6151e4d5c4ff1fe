#include <cmath>

#include <gtest/gtest.h>

#include "csynth/errors.hpp"
#include "csynth/rng.hpp"
#include "csynth/signature.hpp"
#include "support/gradcheck.hpp"

namespace csynth::sig {
namespace {

using testing::random_matrix;

Tensor rows_of(const Tensor& path, std::size_t begin, std::size_t end) {
  Tensor out = Tensor::matrix(end - begin, path.cols());
  for (std::size_t r = begin; r < end; ++r) {
    for (std::size_t c = 0; c < path.cols(); ++c) out(r - begin, c) = path(r, c);
  }
  return out;
}

double max_abs_diff(const SignatureVector& a, const SignatureVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.coeffs[i] - b.coeffs[i]));
  return m;
}

TEST(Signature, LengthAndLevels) {
  EXPECT_EQ(signature_length(2, 3), 2u + 4u + 8u);
  EXPECT_EQ(signature_length(5, 1), 5u);
  EXPECT_THROW((void)signature_length(10, 7), ShapeError);
  const auto s = signature(Tensor::from_rows({{0, 0}, {1, 2}, {3, 1}}), 3);
  EXPECT_EQ(s.size(), 14u);
  EXPECT_NEAR(s.level(1)[0], 3.0, 1e-15);
  EXPECT_NEAR(s.level(1)[1], 1.0, 1e-15);
}

TEST(Signature, OneDimensionalClosedForm) {
  const auto s = signature(Tensor::from_rows({{0.0}, {0.7}, {-0.2}, {1.3}}), 5);
  const double a = 1.3;
  double expected = 1.0;
  for (std::size_t k = 1; k <= 5; ++k) {
    expected *= a / static_cast<double>(k);
    EXPECT_NEAR(s.level(k)[0], expected, 1e-12);
  }
}

TEST(Signature, ConstantPathIsZero) {
  const auto s = signature(Tensor::from_rows({{2, 3}, {2, 3}, {2, 3}}), 3);
  for (double v : s.coeffs) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(SignatureVector::identity(2, 3).coeffs, s.coeffs);
}

TEST(Signature, SegmentLevelTwo) {
  const std::vector<double> inc{1.0, 2.0};
  const auto s = segment_signature(inc, 2);
  const auto l2 = s.level(2);
  EXPECT_DOUBLE_EQ(l2[0], 0.5);
  EXPECT_DOUBLE_EQ(l2[1], 1.0);
  EXPECT_DOUBLE_EQ(l2[2], 1.0);
  EXPECT_DOUBLE_EQ(l2[3], 2.0);
}

TEST(Signature, RejectsShortPath) {
  EXPECT_THROW((void)signature(Tensor::from_rows({{1, 2}}), 2), std::exception);
  EXPECT_THROW((void)signature(Tensor::from_rows({{1}, {2}}), 0), std::exception);
}

TEST(Chen, IdentityElementAndAdditivity) {
  const auto s = signature(Tensor::from_rows({{0, 0}, {1, 2}, {3, 1}}), 3);
  EXPECT_EQ(chen_product(s, SignatureVector::identity(2, 3)), s);
  EXPECT_EQ(chen_product(SignatureVector::identity(2, 3), s), s);
  const std::vector<double> a{0.4};
  const std::vector<double> b{-1.1};
  EXPECT_NEAR(chen_product(segment_signature(a, 2), segment_signature(b, 2)).level(1)[0], -0.7, 1e-15);
  EXPECT_THROW((void)chen_product(s, SignatureVector::identity(3, 3)), std::exception);
  EXPECT_THROW((void)chen_product(s, SignatureVector::identity(2, 2)), std::exception);
}

TEST(Chen, RandomSplitsReproduceFullSignature) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 3 + rng.below(10);
    const std::size_t d = 1 + rng.below(3);
    const Tensor path = random_matrix(rng, len, d);
    const std::size_t split = 1 + rng.below(len - 2);
    const auto full = signature(path, 4);
    const auto joined = chen_product(signature(rows_of(path, 0, split + 1), 4),
                                     signature(rows_of(path, split, len), 4));
    EXPECT_LE(max_abs_diff(full, joined), 1e-10);
  }
}

TEST(Signature, ReparameterizationInvariance) {
  Rng rng(4);
  const Tensor path = random_matrix(rng, 6, 3);
  Tensor dense = Tensor::matrix(16, 3);
  for (std::size_t seg = 0; seg < 5; ++seg) {
    for (std::size_t sub = 0; sub < 3; ++sub) {
      const double w = static_cast<double>(sub) / 3.0;
      for (std::size_t c = 0; c < 3; ++c) dense(seg * 3 + sub, c) = (1 - w) * path(seg, c) + w * path(seg + 1, c);
    }
  }
  for (std::size_t c = 0; c < 3; ++c) dense(15, c) = path(5, c);
  EXPECT_LE(max_abs_diff(signature(path, 4), signature(dense, 4)), 1e-12);
}

TEST(Transforms, TimeAugmentAndLeadLag) {
  const Tensor path = Tensor::from_rows({{1.0}, {2.0}, {0.5}});
  const Tensor ta = time_augment(path);
  EXPECT_EQ(ta.cols(), 2u);
  EXPECT_EQ(ta(0, 0), 0.0);
  EXPECT_EQ(ta(2, 0), 1.0);
  EXPECT_DOUBLE_EQ(signature(ta, 2).level(1)[0], 1.0);
  const Tensor ll = lead_lag(path);
  EXPECT_EQ(ll.rows(), 5u);
  EXPECT_EQ(ll.cols(), 2u);
}

TEST(ExpectedSignature, SingleAndReversedPaths) {
  data::PathBatch one(1, 4, 1);
  for (std::size_t t = 0; t < 4; ++t) one(0, t, 0) = std::sin(static_cast<double>(t));
  EXPECT_EQ(expected_signature(one, 3), signature(one.path(0), 3));

  data::PathBatch pair(2, 4, 1);
  for (std::size_t t = 0; t < 4; ++t) {
    pair(0, t, 0) = static_cast<double>(t) * 0.3;
    pair(1, t, 0) = -static_cast<double>(t) * 0.3;
  }
  const SignatureOptions opts{2, true, false};
  const auto e = expected_signature(pair, opts);
  EXPECT_NEAR(e.level(1)[0], 1.0, 1e-15);
  EXPECT_NEAR(e.level(1)[1], 0.0, 1e-15);
  EXPECT_THROW((void)expected_signature(data::PathBatch{}, 2), std::exception);
}

TEST(Signature, TapeMatchesPlainAndFiniteDifferences) {
  Rng rng(6);
  std::vector<Tensor> points;
  for (int t = 0; t < 4; ++t) points.push_back(random_matrix(rng, 3, 2));
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& p : points) vars.push_back(tape.constant(p));
    const Tensor sigs = signature(tape, vars, 3).value();
    for (std::size_t s = 0; s < 3; ++s) {
      Tensor path = Tensor::matrix(4, 2);
      for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t c = 0; c < 2; ++c) path(t, c) = points[t](s, c);
      }
      const auto plain = signature(path, 3);
      for (std::size_t i = 0; i < plain.size(); ++i) EXPECT_NEAR(sigs(s, i), plain.coeffs[i], 1e-13);
    }
  }
  const testing::Builder f = [](ad::Tape& tape, std::span<const ad::Var> xs) {
    SignatureOptions opts{3, true, true};
    return testing::weighted_sum(tape, signature(tape, xs, opts), 17);
  };
  EXPECT_LT(testing::gradient_rel_error(f, points), 1e-5);
}

}  // namespace
}  // namespace csynth::sig

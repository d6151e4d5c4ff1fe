#include "csynth/sig_loss.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>
#include <string>

#include "csynth/errors.hpp"

namespace csynth::loss {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(const Tensor& t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

Tensor design(const Tensor& features) {
  Tensor x = Tensor::matrix(features.rows(), features.cols() + 1);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < features.cols(); ++j) x(i, j + 1) = features(i, j);
  }
  return x;
}

Tensor averaging_matrix(std::size_t n, std::size_t k) {
  Tensor a = Tensor::matrix(n, n * k);
  const double w = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) a(i, i * k + j) = w;
  }
  return a;
}

}  // namespace

void SignatureRegression::fit(const Tensor& features, const Tensor& targets, double ridge) {
  if (features.rows() != targets.rows()) {
    throw ShapeError("signature regression: " + std::to_string(features.rows()) + " feature rows vs " +
                     std::to_string(targets.rows()) + " target rows");
  }
  if (!(ridge >= 0.0)) throw ConfigError("signature regression: ridge must be >= 0");
  const Tensor x = design(features);
  const auto xm = view(x);
  const auto ym = view(targets);
  Eigen::MatrixXd gram = xm.transpose() * xm;
  gram.diagonal().array() += ridge;
  const Eigen::MatrixXd rhs = xm.transpose() * ym;
  const Eigen::MatrixXd beta = gram.ldlt().solve(rhs);
  if (!beta.allFinite()) throw NumericError("numeric overflow: signature regression solve failed");
  coefficients_ = Tensor::matrix(beta.rows(), beta.cols());
  for (Eigen::Index i = 0; i < beta.rows(); ++i) {
    for (Eigen::Index j = 0; j < beta.cols(); ++j) coefficients_(i, j) = beta(i, j);
  }
  const Eigen::MatrixXd resid = xm * beta - ym;
  residual_ = resid.squaredNorm() / static_cast<double>(targets.rows());
}

void SignatureRegression::set_coefficients(Tensor coefficients) {
  coefficients_ = std::move(coefficients);
}

Tensor SignatureRegression::predict(const Tensor& features) const {
  if (!fitted()) throw std::logic_error("signature regression: predict before fit");
  if (features.cols() + 1 != coefficients_.rows()) {
    throw ShapeError("signature regression: expected " + std::to_string(coefficients_.rows() - 1) +
                     " features, got " + std::to_string(features.cols()));
  }
  const Tensor x = design(features);
  const RowMatrix p = view(x) * view(coefficients_);
  Tensor out = Tensor::matrix(p.rows(), p.cols());
  std::copy(p.data(), p.data() + p.size(), out.data().begin());
  return out;
}

ad::Var sig_w1_loss(ad::Tape& tape, const Tensor& expected, std::span<const ad::Var> fake_points,
                    std::size_t mc_samples, const sig::SignatureOptions& opts, SigEstimator estimator) {
  if (mc_samples == 0) throw ConfigError("sig_w1_loss: mc_samples must be >= 1");
  if (fake_points.empty()) throw ShapeError("sig_w1_loss: empty fake path");
  const std::size_t n = expected.rows();
  if (fake_points[0].rows() != n * mc_samples) {
    throw ShapeError("sig_w1_loss: fake batch has " + std::to_string(fake_points[0].rows()) +
                     " rows, expected " + std::to_string(n * mc_samples));
  }
  const ad::Var sigs = sig::signature(tape, fake_points, opts);
  if (sigs.cols() != expected.cols()) {
    throw ShapeError("sig_w1_loss: signature length " + std::to_string(sigs.cols()) +
                     " does not match expected " + std::to_string(expected.cols()));
  }
  if (estimator == SigEstimator::kUnbiased && mc_samples > 1) {
    Tensor rep = Tensor::matrix(n * mc_samples, expected.cols());
    for (std::size_t r = 0; r < rep.rows(); ++r) {
      for (std::size_t j = 0; j < rep.cols(); ++j) rep(r, j) = expected(r / mc_samples, j);
    }
    Tensor sums = averaging_matrix(n, mc_samples);
    for (double& v : sums.data()) v = v > 0.0 ? 1.0 : 0.0;
    const ad::Var dev = tape.sub(sigs, tape.constant(std::move(rep)));
    const ad::Var total = tape.matmul(tape.constant(std::move(sums)), dev);
    // |sum_k D_k|^2 - sum_k |D_k|^2 keeps only the cross terms k != l.
    const ad::Var cross = tape.sub(tape.sum(tape.mul(total, total)), tape.sum(tape.mul(dev, dev)));
    return tape.scale(cross, 1.0 / static_cast<double>(n * mc_samples * (mc_samples - 1)));
  }
  const ad::Var avg = mc_samples == 1 ? sigs : tape.matmul(tape.constant(averaging_matrix(n, mc_samples)), sigs);
  const ad::Var diff = tape.sub(avg, tape.constant(expected));
  return tape.scale(tape.sum(tape.mul(diff, diff)), 1.0 / static_cast<double>(n));
}

double sig_w1_loss(const Tensor& expected, const Tensor& fake_signatures, std::size_t mc_samples,
                   SigEstimator estimator) {
  if (mc_samples == 0) throw ConfigError("sig_w1_loss: mc_samples must be >= 1");
  const std::size_t n = expected.rows();
  if (fake_signatures.rows() != n * mc_samples || fake_signatures.cols() != expected.cols()) {
    throw ShapeError("sig_w1_loss: fake signatures " + shape_string(fake_signatures.shape()) +
                     " do not match expected " + shape_string(expected.shape()));
  }
  double total = 0.0;
  if (estimator == SigEstimator::kUnbiased && mc_samples > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < expected.cols(); ++j) {
        double sum = 0.0;
        double sq = 0.0;
        for (std::size_t k = 0; k < mc_samples; ++k) {
          const double dev = fake_signatures(i * mc_samples + k, j) - expected(i, j);
          sum += dev;
          sq += dev * dev;
        }
        total += sum * sum - sq;
      }
    }
    return total / static_cast<double>(n * mc_samples * (mc_samples - 1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < expected.cols(); ++j) {
      double avg = 0.0;
      for (std::size_t k = 0; k < mc_samples; ++k) avg += fake_signatures(i * mc_samples + k, j);
      const double diff = avg / static_cast<double>(mc_samples) - expected(i, j);
      total += diff * diff;
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace csynth::loss

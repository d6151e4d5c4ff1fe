#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csynth/dataio.hpp"
#include "csynth/tape.hpp"
#include "csynth/tensor.hpp"

namespace csynth::sig {

/// Number of coefficients in levels 1..depth. Throws ShapeError when d^depth exceeds 1e6.
[[nodiscard]] std::size_t signature_length(std::size_t dim, std::size_t depth);

/// Truncated signature; level k holds dim^k coefficients in lexicographic word order.
/// The level-0 term (always 1) is implicit.
struct SignatureVector {
  std::size_t dim = 0;
  std::size_t depth = 0;
  std::vector<double> coeffs;

  /// Signature of a constant path: every stored level is zero.
  static SignatureVector identity(std::size_t dim, std::size_t depth);

  [[nodiscard]] std::span<const double> level(std::size_t k) const;
  [[nodiscard]] std::span<double> level(std::size_t k);
  [[nodiscard]] std::size_t size() const noexcept { return coeffs.size(); }

  friend bool operator==(const SignatureVector&, const SignatureVector&) = default;
};

/// Exact signature of the piecewise-linear path through the rows of `path` (T x d, T >= 2).
[[nodiscard]] SignatureVector signature(const Tensor& path, std::size_t depth);
/// Signature of a single straight segment with the given increment.
[[nodiscard]] SignatureVector segment_signature(std::span<const double> increment,
                                                std::size_t depth);
/// Truncated tensor-algebra product.
[[nodiscard]] SignatureVector chen_product(const SignatureVector& a, const SignatureVector& b);

/// Prepend a time column running linearly from 0 to 1.
[[nodiscard]] Tensor time_augment(const Tensor& path);
/// Lead-lag transform: 2T-1 points of dimension 2d.
[[nodiscard]] Tensor lead_lag(const Tensor& path);

struct SignatureOptions {
  std::size_t depth = 4;
  bool time_augment = true;
  bool lead_lag = false;
};

/// Transformed path of sample s as configured by `opts`.
[[nodiscard]] Tensor transform_path(const Tensor& path, const SignatureOptions& opts);
/// One signature per sample, as an n x L matrix.
[[nodiscard]] Tensor batch_signatures(const data::PathBatch& batch, const SignatureOptions& opts);
/// Coefficient-wise mean signature over the batch.
[[nodiscard]] SignatureVector expected_signature(const data::PathBatch& batch,
                                                 const SignatureOptions& opts);
[[nodiscard]] SignatureVector expected_signature(const data::PathBatch& batch, std::size_t depth);

/// Differentiable batched signature. `points[t]` is the n x d matrix of the t-th
/// path point for n paths; the result is n x L.
ad::Var signature(ad::Tape& tape, std::span<const ad::Var> points, std::size_t depth);
std::vector<ad::Var> time_augment(ad::Tape& tape, std::span<const ad::Var> points);
std::vector<ad::Var> lead_lag(ad::Tape& tape, std::span<const ad::Var> points);
ad::Var signature(ad::Tape& tape, std::span<const ad::Var> points, const SignatureOptions& opts);

}  // namespace csynth::sig

#include "csynth/signature.hpp"

#include <algorithm>
#include <string>

#include "csynth/errors.hpp"

namespace csynth::sig {

namespace {

constexpr std::size_t kMaxLevelSize = 1'000'000;

std::size_t level_offset(std::size_t dim, std::size_t k) {
  std::size_t off = 0;
  std::size_t width = 1;
  for (std::size_t i = 1; i < k; ++i) {
    width *= dim;
    off += width;
  }
  return off;
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) out *= base;
  return out;
}

}  // namespace

std::size_t signature_length(std::size_t dim, std::size_t depth) {
  if (dim == 0) throw ShapeError("signature: dimension must be >= 1");
  if (depth == 0) throw ShapeError("signature: depth must be >= 1");
  std::size_t total = 0;
  std::size_t width = 1;
  for (std::size_t k = 1; k <= depth; ++k) {
    if (width > kMaxLevelSize / dim) {
      throw ShapeError("signature: level " + std::to_string(k) + " of dimension " +
                       std::to_string(dim) + " exceeds 1e6 coefficients");
    }
    width *= dim;
    total += width;
  }
  return total;
}

SignatureVector SignatureVector::identity(std::size_t dim, std::size_t depth) {
  return SignatureVector{dim, depth, std::vector<double>(signature_length(dim, depth), 0.0)};
}

std::span<const double> SignatureVector::level(std::size_t k) const {
  if (k == 0 || k > depth) throw ShapeError("signature: level out of range");
  return std::span<const double>(coeffs).subspan(level_offset(dim, k), ipow(dim, k));
}

std::span<double> SignatureVector::level(std::size_t k) {
  if (k == 0 || k > depth) throw ShapeError("signature: level out of range");
  return std::span<double>(coeffs).subspan(level_offset(dim, k), ipow(dim, k));
}

SignatureVector segment_signature(std::span<const double> increment, std::size_t depth) {
  const std::size_t d = increment.size();
  SignatureVector out = SignatureVector::identity(d, depth);
  auto first = out.level(1);
  std::copy(increment.begin(), increment.end(), first.begin());
  for (std::size_t k = 2; k <= depth; ++k) {
    auto prev = out.level(k - 1);
    auto cur = out.level(k);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t w = 0; w < prev.size(); ++w) {
      for (std::size_t j = 0; j < d; ++j) cur[w * d + j] = prev[w] * increment[j] * inv_k;
    }
  }
  return out;
}

SignatureVector chen_product(const SignatureVector& a, const SignatureVector& b) {
  if (a.dim != b.dim || a.depth != b.depth) {
    throw ShapeError("chen_product: mismatched signatures (d=" + std::to_string(a.dim) + ", D=" +
                     std::to_string(a.depth) + ") vs (d=" + std::to_string(b.dim) +
                     ", D=" + std::to_string(b.depth) + ")");
  }
  SignatureVector out = SignatureVector::identity(a.dim, a.depth);
  for (std::size_t k = 1; k <= a.depth; ++k) {
    auto cur = out.level(k);
    auto ak = a.level(k);
    auto bk = b.level(k);
    for (std::size_t w = 0; w < cur.size(); ++w) cur[w] = ak[w] + bk[w];
    for (std::size_t i = 1; i < k; ++i) {
      auto ai = a.level(i);
      auto bj = b.level(k - i);
      for (std::size_t u = 0; u < ai.size(); ++u) {
        const double x = ai[u];
        if (x == 0.0) continue;
        double* row = cur.data() + u * bj.size();
        for (std::size_t v = 0; v < bj.size(); ++v) row[v] += x * bj[v];
      }
    }
  }
  return out;
}

SignatureVector signature(const Tensor& path, std::size_t depth) {
  const std::size_t t_len = path.rows();
  const std::size_t d = path.cols();
  if (t_len < 2) throw ShapeError("signature: path needs at least 2 points, got " + std::to_string(t_len));
  SignatureVector acc = SignatureVector::identity(d, depth);
  std::vector<double> inc(d);
  for (std::size_t t = 0; t + 1 < t_len; ++t) {
    for (std::size_t j = 0; j < d; ++j) inc[j] = path(t + 1, j) - path(t, j);
    acc = chen_product(acc, segment_signature(inc, depth));
  }
  return acc;
}

Tensor time_augment(const Tensor& path) {
  const std::size_t t_len = path.rows();
  if (t_len < 2) throw ShapeError("time_augment: path needs at least 2 points");
  Tensor out = Tensor::matrix(t_len, path.cols() + 1);
  for (std::size_t t = 0; t < t_len; ++t) {
    out(t, 0) = static_cast<double>(t) / static_cast<double>(t_len - 1);
    for (std::size_t j = 0; j < path.cols(); ++j) out(t, j + 1) = path(t, j);
  }
  return out;
}

Tensor lead_lag(const Tensor& path) {
  const std::size_t t_len = path.rows();
  const std::size_t d = path.cols();
  Tensor out = Tensor::matrix(2 * t_len - 1, 2 * d);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      out(2 * t, j) = path(t, j);
      out(2 * t, d + j) = path(t, j);
      if (t + 1 < t_len) {
        out(2 * t + 1, j) = path(t + 1, j);
        out(2 * t + 1, d + j) = path(t, j);
      }
    }
  }
  return out;
}

Tensor transform_path(const Tensor& path, const SignatureOptions& opts) {
  Tensor p = opts.lead_lag ? lead_lag(path) : path;
  return opts.time_augment ? time_augment(p) : p;
}

Tensor batch_signatures(const data::PathBatch& batch, const SignatureOptions& opts) {
  if (batch.empty()) throw ShapeError("batch_signatures: empty batch");
  std::size_t d = batch.dims() * (opts.lead_lag ? 2 : 1) + (opts.time_augment ? 1 : 0);
  Tensor out = Tensor::matrix(batch.samples(), signature_length(d, opts.depth));
  for (std::size_t s = 0; s < batch.samples(); ++s) {
    const SignatureVector sv = signature(transform_path(batch.path(s), opts), opts.depth);
    for (std::size_t j = 0; j < sv.size(); ++j) out(s, j) = sv.coeffs[j];
  }
  return out;
}

SignatureVector expected_signature(const data::PathBatch& batch, const SignatureOptions& opts) {
  if (batch.empty()) throw ShapeError("expected_signature: empty batch");
  const Tensor all = batch_signatures(batch, opts);
  const std::size_t d = batch.dims() * (opts.lead_lag ? 2 : 1) + (opts.time_augment ? 1 : 0);
  SignatureVector out = SignatureVector::identity(d, opts.depth);
  const double inv_n = 1.0 / static_cast<double>(batch.samples());
  for (std::size_t s = 0; s < all.rows(); ++s) {
    for (std::size_t j = 0; j < all.cols(); ++j) out.coeffs[j] += all(s, j) * inv_n;
  }
  return out;
}

SignatureVector expected_signature(const data::PathBatch& batch, std::size_t depth) {
  return expected_signature(batch, SignatureOptions{depth, false, false});
}

ad::Var signature(ad::Tape& tape, std::span<const ad::Var> points, std::size_t depth) {
  if (points.size() < 2) throw ShapeError("signature: path needs at least 2 points");
  const std::size_t d = points[0].cols();
  (void)signature_length(d, depth);
  std::vector<ad::Var> acc;  // acc[k-1] = level k, n x d^k
  for (std::size_t t = 0; t + 1 < points.size(); ++t) {
    const ad::Var inc = tape.sub(points[t + 1], points[t]);
    std::vector<ad::Var> seg{inc};
    for (std::size_t k = 2; k <= depth; ++k) {
      seg.push_back(tape.scale(tape.row_outer(seg.back(), inc), 1.0 / static_cast<double>(k)));
    }
    if (acc.empty()) {
      acc = std::move(seg);
      continue;
    }
    std::vector<ad::Var> next(depth);
    for (std::size_t k = 1; k <= depth; ++k) {
      ad::Var level = tape.add(acc[k - 1], seg[k - 1]);
      for (std::size_t i = 1; i < k; ++i) {
        level = tape.add(level, tape.row_outer(acc[i - 1], seg[k - i - 1]));
      }
      next[k - 1] = level;
    }
    acc = std::move(next);
  }
  return acc.size() == 1 ? acc[0] : tape.concat_cols(acc);
}

std::vector<ad::Var> time_augment(ad::Tape& tape, std::span<const ad::Var> points) {
  if (points.size() < 2) throw ShapeError("time_augment: path needs at least 2 points");
  const std::size_t n = points[0].rows();
  std::vector<ad::Var> out;
  out.reserve(points.size());
  for (std::size_t t = 0; t < points.size(); ++t) {
    Tensor col = Tensor::matrix(n, 1);
    col.fill(static_cast<double>(t) / static_cast<double>(points.size() - 1));
    const ad::Var parts[] = {tape.constant(std::move(col)), points[t]};
    out.push_back(tape.concat_cols(parts));
  }
  return out;
}

std::vector<ad::Var> lead_lag(ad::Tape& tape, std::span<const ad::Var> points) {
  std::vector<ad::Var> out;
  for (std::size_t t = 0; t < points.size(); ++t) {
    const ad::Var same[] = {points[t], points[t]};
    out.push_back(tape.concat_cols(same));
    if (t + 1 < points.size()) {
      const ad::Var step[] = {points[t + 1], points[t]};
      out.push_back(tape.concat_cols(step));
    }
  }
  return out;
}

ad::Var signature(ad::Tape& tape, std::span<const ad::Var> points, const SignatureOptions& opts) {
  std::vector<ad::Var> p(points.begin(), points.end());
  if (opts.lead_lag) p = lead_lag(tape, p);
  if (opts.time_augment) p = time_augment(tape, p);
  return signature(tape, p, opts.depth);
}

}  // namespace csynth::sig

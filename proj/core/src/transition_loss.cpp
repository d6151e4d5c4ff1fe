#include "csynth/transition_loss.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "csynth/errors.hpp"

namespace csynth::loss {

namespace {

struct Moments {
  ad::Var mean;
  ad::Var cov;
};

Moments moments(ad::Tape& tape, ad::Var increments) {
  const double inv_n = 1.0 / static_cast<double>(increments.rows());
  const ad::Var mean = tape.scale(tape.sum_rows(increments), inv_n);
  const ad::Var centred = tape.sub(increments, mean);
  const ad::Var cov = tape.scale(tape.matmul(tape.transpose(centred), centred), inv_n);
  return {mean, cov};
}

}  // namespace

void TransitionBinning::validate(std::size_t dims) const {
  if (bins < 1) throw ConfigError("transition binning: bins must be >= 1");
  if (key_dim >= dims) {
    throw ConfigError("transition binning: key_dim " + std::to_string(key_dim) + " out of range for " +
                      std::to_string(dims) + " dims");
  }
  if (!(increment_scale > 0.0)) throw ConfigError("transition binning: increment_scale must be > 0");
}

std::size_t bin_index(std::span<const double> edges, double value) noexcept {
  return static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
}

ad::Var transition_moment_loss(ad::Tape& tape, const data::PathBatch& real,
                               std::span<const ad::Var> fake, const TransitionBinning& binning,
                               TransitionInfo* info) {
  real.validate();
  binning.validate(real.dims());
  const std::size_t steps = real.steps();
  const std::size_t d = real.dims();
  if (fake.size() != steps) {
    throw ShapeError("transition_moment_loss: fake has " + std::to_string(fake.size()) +
                     " steps, real has " + std::to_string(steps));
  }
  for (const auto& v : fake) {
    if (v.cols() != d) throw ShapeError("transition_moment_loss: fake dimension mismatch");
  }
  TransitionInfo local;
  std::vector<ad::Var> terms;
  Tensor identity = Tensor::matrix(d, d);
  for (std::size_t k = 0; k < d; ++k) identity(k, k) = 1.0;
  for (std::size_t t = 0; t + 1 < steps; ++t) {
    std::vector<double> key(real.samples());
    for (std::size_t s = 0; s < real.samples(); ++s) key[s] = real(s, t, binning.key_dim);
    std::sort(key.begin(), key.end());
    std::vector<double> edges;
    for (std::size_t b = 1; b < binning.bins; ++b) {
      edges.push_back(data::quantile_sorted(key, static_cast<double>(b) / static_cast<double>(binning.bins)));
    }
    std::vector<std::vector<std::size_t>> real_bins(binning.bins);
    std::vector<std::vector<std::size_t>> fake_bins(binning.bins);
    for (std::size_t s = 0; s < real.samples(); ++s) {
      real_bins[bin_index(edges, real(s, t, binning.key_dim))].push_back(s);
    }
    const Tensor& fake_now = fake[t].value();
    for (std::size_t s = 0; s < fake_now.rows(); ++s) {
      fake_bins[bin_index(edges, fake_now(s, binning.key_dim))].push_back(s);
    }
    Tensor real_inc = Tensor::matrix(real.samples(), d);
    for (std::size_t s = 0; s < real.samples(); ++s) {
      for (std::size_t k = 0; k < d; ++k) {
        real_inc(s, k) = (real(s, t + 1, k) - real(s, t, k)) * binning.increment_scale;
      }
    }
    const ad::Var real_all = tape.constant(std::move(real_inc));
    const ad::Var fake_all = tape.scale(tape.sub(fake[t + 1], fake[t]), binning.increment_scale);
    for (std::size_t b = 0; b < binning.bins; ++b) {
      if (real_bins[b].size() < 2 || fake_bins[b].size() < 2) {
        ++local.skipped_bins;
        continue;
      }
      ++local.used_bins;
      const Moments mr = moments(tape, tape.gather_rows(real_all, real_bins[b]));
      const Moments mf = moments(tape, tape.gather_rows(fake_all, fake_bins[b]));
      const ad::Var dm = tape.sub(mf.mean, mr.mean);
      const ad::Var dc = tape.sub(mf.cov, mr.cov);
      ad::Var term = tape.add(tape.sum(tape.mul(dm, dm)), tape.sum(tape.mul(dc, dc)));
      if (binning.debias_fake) {
        // Var(mean_k) ~ c_kk / n and Var(c_kl) ~ (c_kk c_ll + c_kl^2) / n.
        const double inv_n = 1.0 / static_cast<double>(fake_bins[b].size());
        const ad::Var diag = tape.mul(mf.cov, tape.constant(identity));
        const ad::Var trace = tape.sum(diag);
        const ad::Var cov_var = tape.add(tape.mul(trace, trace), tape.sum(tape.mul(mf.cov, mf.cov)));
        term = tape.sub(term, tape.scale(tape.add(trace, cov_var), inv_n));
      }
      terms.push_back(term);
    }
  }
  if (info != nullptr) *info = local;
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  ad::Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = tape.add(total, terms[i]);
  return tape.scale(total, 1.0 / static_cast<double>(terms.size()));
}

double transition_moment_loss(const data::PathBatch& real, const data::PathBatch& fake,
                              const TransitionBinning& binning, TransitionInfo* info) {
  if (fake.steps() != real.steps() || fake.dims() != real.dims()) {
    throw ShapeError("transition_moment_loss: real and fake shapes differ");
  }
  ad::Tape tape;
  std::vector<ad::Var> points;
  for (std::size_t t = 0; t < fake.steps(); ++t) points.push_back(tape.constant(fake.time_slice(t)));
  return transition_moment_loss(tape, real, points, binning, info).item();
}

}  // namespace csynth::loss

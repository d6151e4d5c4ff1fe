#include <cmath>
#include <string>

#include "csynth/errors.hpp"
#include "csynth/nn.hpp"
#include "csynth/sig_loss.hpp"
#include "csynth/signature.hpp"
#include "generator_impl.hpp"

namespace csynth::gen::detail {

namespace {

// Autoregressive feed-forward generator. Works on standardized increments
// u_t = (x_{t+1} - x_t - mu) / s and conditions on the last p of them, the
// current standardized level and fresh noise.
struct ArFnn {
  std::size_t dim;
  std::size_t past;
  std::size_t noise_dim;
  nn::Mlp net;

  ArFnn(const TrainConfig& cfg, std::size_t d)
      : dim(d),
        past(cfg.past_steps),
        noise_dim(cfg.effective_noise_dim(d)),
        net("siggan.arfnn", cfg.past_steps * d + d + cfg.effective_noise_dim(d), cfg.hidden, cfg.layers, d) {}

  void init(ad::ParamSet& params, Rng& rng) const { net.init(params, rng); }

  struct State {
    std::vector<ad::Var> window;  // last p standardized increments, oldest first
    ad::Var level;                // normalized level x_t
  };

  /// Advance one step; returns the new standardized increment.
  ad::Var step(ad::Tape& tape, const GeneratorModel& model, const ad::ParamSet& params, State& st,
               const Tensor& z) const {
    const ad::Var center = tape.constant(model.aux.at("state.center"));
    Tensor inv = model.aux.at("state.scale");
    for (double& v : inv.data()) v = 1.0 / v;
    std::vector<ad::Var> parts = st.window;
    parts.push_back(tape.mul(tape.sub(st.level, center), tape.constant(inv)));
    parts.push_back(tape.constant(z));
    const ad::Var u = net(tape, params, tape.concat_cols(parts));
    const ad::Var dx = tape.add(tape.mul(u, tape.constant(model.aux.at("siggan.inc_scale"))),
                                tape.constant(model.aux.at("siggan.inc_center")));
    st.level = tape.add(st.level, dx);
    st.window.erase(st.window.begin());
    st.window.push_back(u);
    return u;
  }
};

sig::SignatureOptions future_options(const TrainConfig& cfg) {
  return sig::SignatureOptions{cfg.sig_depth, cfg.sig_time_augment, cfg.sig_lead_lag};
}

sig::SignatureOptions past_options(const TrainConfig& cfg) {
  return sig::SignatureOptions{cfg.past_sig_depth, true, false};
}

/// Standardized increments, samples x (T-1) x d.
data::PathBatch standardized_increments(const GeneratorModel& model, const data::PathBatch& norm) {
  const Tensor& c = model.aux.at("siggan.inc_center");
  const Tensor& s = model.aux.at("siggan.inc_scale");
  data::PathBatch out(norm.samples(), norm.steps() - 1, norm.dims());
  for (std::size_t i = 0; i < norm.samples(); ++i) {
    for (std::size_t t = 0; t + 1 < norm.steps(); ++t) {
      for (std::size_t k = 0; k < norm.dims(); ++k) {
        out(i, t, k) = (norm(i, t + 1, k) - norm(i, t, k) - c(0, k)) / s(0, k);
      }
    }
  }
  return out;
}

/// Cumulative path (len + 1 points, starting at 0) of increments [from, from + len).
Tensor cumulative(const data::PathBatch& inc, std::size_t sample, std::size_t from, std::size_t len) {
  Tensor out = Tensor::matrix(len + 1, inc.dims());
  for (std::size_t j = 0; j < len; ++j) {
    for (std::size_t k = 0; k < inc.dims(); ++k) out(j + 1, k) = out(j, k) + inc(sample, from + j, k);
  }
  return out;
}

struct Pair {
  std::size_t sample;
  std::size_t t0;  // index of the current point
};

Tensor past_features(const data::PathBatch& inc, const std::vector<Pair>& pairs, const TrainConfig& cfg) {
  const auto opts = past_options(cfg);
  Tensor out;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto path = sig::transform_path(cumulative(inc, pairs[r].sample, pairs[r].t0 - cfg.past_steps, cfg.past_steps), opts);
    const auto sv = sig::signature(path, opts.depth);
    if (r == 0) out = Tensor::matrix(pairs.size(), sv.size());
    for (std::size_t j = 0; j < sv.size(); ++j) out(r, j) = sv.coeffs[j];
  }
  return out;
}

void fit_increment_scaling(GeneratorModel& model, const data::PathBatch& norm) {
  const std::size_t d = norm.dims();
  Tensor c = Tensor::matrix(1, d);
  Tensor s = Tensor::matrix(1, d);
  const double count = static_cast<double>(norm.samples() * (norm.steps() - 1));
  for (std::size_t k = 0; k < d; ++k) {
    double m = 0.0;
    for (std::size_t i = 0; i < norm.samples(); ++i) {
      for (std::size_t t = 0; t + 1 < norm.steps(); ++t) m += norm(i, t + 1, k) - norm(i, t, k);
    }
    m /= count;
    double v = 0.0;
    for (std::size_t i = 0; i < norm.samples(); ++i) {
      for (std::size_t t = 0; t + 1 < norm.steps(); ++t) {
        const double e = norm(i, t + 1, k) - norm(i, t, k) - m;
        v += e * e;
      }
    }
    c(0, k) = m;
    s(0, k) = std::max(std::sqrt(v / count), 1e-8);
  }
  model.aux["siggan.inc_center"] = c;
  model.aux["siggan.inc_scale"] = s;
}

}  // namespace

void train_siggan(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs) {
  const TrainConfig& cfg = model.config;
  const std::size_t d = model.dim;
  const std::size_t p = cfg.past_steps;
  const std::size_t q = cfg.future_steps;
  if (model.seq_len < p + q + 1) {
    throw ConfigError("siggan: seq_len " + std::to_string(model.seq_len) + " too short for past_steps + future_steps");
  }
  fit_increment_scaling(model, normalized);
  const data::PathBatch inc = standardized_increments(model, normalized);

  // Initial pasts for sampling: the first p + 1 points of every window.
  Tensor bank = Tensor::matrix(normalized.samples(), (p + 1) * d);
  for (std::size_t i = 0; i < normalized.samples(); ++i) {
    for (std::size_t t = 0; t <= p; ++t) {
      for (std::size_t k = 0; k < d; ++k) bank(i, t * d + k) = normalized(i, t, k);
    }
  }
  model.aux["siggan.initial_past"] = bank;

  // Conditional expected future signature, fitted once on every real (past, future) pair.
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < inc.samples(); ++i) {
    for (std::size_t t0 = p; t0 + q <= inc.steps(); ++t0) pairs.push_back({i, t0});
  }
  const auto fopts = future_options(cfg);
  const Tensor features = past_features(inc, pairs, cfg);
  Tensor targets;
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const auto sv = sig::signature(sig::transform_path(cumulative(inc, pairs[r].sample, pairs[r].t0, q), fopts), fopts.depth);
    if (r == 0) targets = Tensor::matrix(pairs.size(), sv.size());
    for (std::size_t j = 0; j < sv.size(); ++j) targets(r, j) = sv.coeffs[j];
  }
  loss::SignatureRegression regression;
  regression.fit(features, targets, cfg.ridge);
  model.aux["siggan.regression"] = regression.coefficients();
  const Tensor expected_all = regression.predict(features);

  const ArFnn net(cfg, d);
  Rng init_rng(derive_seed(cfg.seed, "siggan-init"));
  net.init(model.params, init_rng);
  ad::Adam opt(ad::AdamConfig{cfg.lr_generator});
  const std::uint64_t noise_seed = derive_seed(cfg.seed, "siggan-noise");
  const std::size_t k_mc = cfg.mc_samples;

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto pick = minibatch(cfg.seed, it, pairs.size(), cfg.batch_size);
    const std::size_t n = pick.size();
    const std::size_t rows = n * k_mc;
    Tensor expected = Tensor::matrix(n, expected_all.cols());
    std::vector<Tensor> window(p, Tensor::matrix(rows, d));
    Tensor level = Tensor::matrix(rows, d);
    for (std::size_t i = 0; i < n; ++i) {
      const Pair& pr = pairs[pick[i]];
      for (std::size_t j = 0; j < expected.cols(); ++j) expected(i, j) = expected_all(pick[i], j);
      for (std::size_t m = 0; m < k_mc; ++m) {
        const std::size_t r = i * k_mc + m;
        for (std::size_t k = 0; k < d; ++k) {
          level(r, k) = normalized(pr.sample, pr.t0, k);
          for (std::size_t w = 0; w < p; ++w) window[w](r, k) = inc(pr.sample, pr.t0 - p + w, k);
        }
      }
    }
    const auto z = noise(derive_seed(noise_seed, it), rows, q, net.noise_dim);
    ad::Tape tape;
    ArFnn::State st;
    for (const auto& w : window) st.window.push_back(tape.constant(w));
    st.level = tape.constant(level);
    std::vector<ad::Var> pts{tape.constant(Tensor::matrix(rows, d))};
    for (std::size_t j = 0; j < q; ++j) {
      const ad::Var u = net.step(tape, model, model.params, st, z[j]);
      pts.push_back(tape.add(pts.back(), u));
    }
    const ad::Var loss = loss::sig_w1_loss(tape, expected, pts, k_mc, fopts,
                                           cfg.sig_unbiased ? loss::SigEstimator::kUnbiased
                                                            : loss::SigEstimator::kMonteCarloAverage);
    check_loss(it, "signature", loss.item());
    apply(opt, model.params, tape.backward(loss), cfg.grad_clip);
    model.meta.curve.record(it, loss.item());
    if (obs) obs(it, loss.item(), std::nullopt);
  }
}

data::PathBatch sample_siggan(const GeneratorModel& model, std::size_t n, std::uint64_t seed) {
  const TrainConfig& cfg = model.config;
  const std::size_t d = model.dim;
  const std::size_t p = cfg.past_steps;
  const ArFnn net(cfg, d);
  const Tensor& bank = model.aux.at("siggan.initial_past");
  const Tensor& ic = model.aux.at("siggan.inc_center");
  const Tensor& is = model.aux.at("siggan.inc_scale");

  std::vector<Tensor> points(p + 1, Tensor::matrix(n, d));
  const std::uint64_t key = derive_seed(seed, "initial-past");
  for (std::size_t s = 0; s < n; ++s) {
    Rng rng(key, s);
    const std::size_t row = rng.below(bank.rows());
    for (std::size_t t = 0; t <= p; ++t) {
      for (std::size_t k = 0; k < d; ++k) points[t](s, k) = bank(row, t * d + k);
    }
  }
  const std::size_t remaining = model.seq_len - (p + 1);
  const auto z = noise(derive_seed(seed, "siggan"), n, remaining, net.noise_dim);
  ad::Tape tape;
  ArFnn::State st;
  for (std::size_t w = 0; w < p; ++w) {
    Tensor u = Tensor::matrix(n, d);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t k = 0; k < d; ++k) u(s, k) = (points[w + 1](s, k) - points[w](s, k) - ic(0, k)) / is(0, k);
    }
    st.window.push_back(tape.constant(std::move(u)));
  }
  st.level = tape.constant(points[p]);
  for (std::size_t j = 0; j < remaining; ++j) {
    (void)net.step(tape, model, model.params, st, z[j]);
    points.push_back(st.level.value());
  }
  return to_batch(points, d);
}

}  // namespace csynth::gen::detail

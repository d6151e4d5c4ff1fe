#include <cmath>

#include "csynth/errors.hpp"
#include "csynth/nn.hpp"
#include "csynth/transition_loss.hpp"
#include "generator_impl.hpp"

namespace csynth::gen::detail {

namespace {

// Drift b(t, x) and diffusion factor s(t, x) for the Euler scheme
//   X_{t+1} = X_t + b dt + L z sqrt(dt),
// where L is lower-triangular with a softplus diagonal.
struct CegenNets {
  std::size_t dim;
  nn::Mlp drift;
  nn::Mlp diffusion;
  Tensor diag_mask;
  Tensor off_mask;
  Tensor gather;  // m x d, sums the terms of row k of L z
  std::vector<std::size_t> noise_col;

  CegenNets(const TrainConfig& cfg, std::size_t d)
      : dim(d),
        drift("cegen.drift", d + 1, cfg.hidden, cfg.layers, d),
        diffusion("cegen.diffusion", d + 1, cfg.hidden, cfg.layers, d * (d + 1) / 2) {
    const std::size_t m = d * (d + 1) / 2;
    diag_mask = Tensor::matrix(1, m);
    off_mask = Tensor::matrix(1, m);
    gather = Tensor::matrix(m, d);
    std::size_t c = 0;
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t j = 0; j <= k; ++j, ++c) {
        (j == k ? diag_mask : off_mask)(0, c) = 1.0;
        gather(c, k) = 1.0;
        noise_col.push_back(j);
      }
    }
  }

  void init(ad::ParamSet& params, Rng& rng) const {
    drift.init(params, rng);
    diffusion.init(params, rng);
  }

  /// Full path as one n x d var per step, starting from x0.
  std::vector<ad::Var> rollout(ad::Tape& tape, const GeneratorModel& model, const ad::ParamSet& params,
                               const Tensor& x0, const std::vector<Tensor>& z) const {
    const std::size_t n = x0.rows();
    const double dt = model.dt;
    const double sqdt = std::sqrt(dt);
    const ad::Var center = tape.constant(model.aux.at("state.center"));
    Tensor inv = model.aux.at("state.scale");
    for (double& v : inv.data()) v = 1.0 / v;
    const ad::Var inv_scale = tape.constant(inv);
    const ad::Var dmask = tape.constant(diag_mask);
    const ad::Var omask = tape.constant(off_mask);
    const ad::Var g = tape.constant(gather);
    std::vector<ad::Var> path{tape.constant(x0)};
    for (std::size_t t = 0; t + 1 < model.seq_len; ++t) {
      const ad::Var x = path.back();
      Tensor tcol = Tensor::matrix(n, 1, static_cast<double>(t) / static_cast<double>(model.seq_len - 1));
      const ad::Var parts[] = {tape.constant(std::move(tcol)), tape.mul(tape.sub(x, center), inv_scale)};
      const ad::Var in = tape.concat_cols(parts);
      const ad::Var b = drift(tape, params, in);
      const ad::Var raw = diffusion(tape, params, in);
      const ad::Var l = tape.add(tape.mul(tape.softplus(raw), dmask), tape.mul(raw, omask));
      Tensor zexp = Tensor::matrix(n, noise_col.size());
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t c = 0; c < noise_col.size(); ++c) zexp(s, c) = z[t](s, noise_col[c]);
      }
      const ad::Var shock = tape.matmul(tape.mul(l, tape.constant(std::move(zexp))), g);
      path.push_back(tape.add(x, tape.add(tape.scale(b, dt), tape.scale(shock, sqdt))));
    }
    return path;
  }
};

}  // namespace

void train_cegen(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs) {
  const TrainConfig& cfg = model.config;
  const std::size_t d = model.dim;
  if (cfg.bin_dim >= d) throw ConfigError("cegen: bin_dim out of range");
  const CegenNets nets(cfg, d);
  Rng init_rng(derive_seed(cfg.seed, "cegen-init"));
  nets.init(model.params, init_rng);
  ad::Adam opt(ad::AdamConfig{cfg.lr_generator});
  const loss::TransitionBinning binning{cfg.bins, cfg.bin_dim, 1.0 / std::sqrt(model.dt), cfg.transition_debias};
  const std::uint64_t noise_seed = derive_seed(cfg.seed, "cegen-noise");

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto idx = minibatch(cfg.seed, it, normalized.samples(), cfg.batch_size);
    const data::PathBatch real = normalized.select(idx);
    const auto z = noise(derive_seed(noise_seed, it), idx.size(), model.seq_len - 1, d);
    ad::Tape tape;
    const auto fake = nets.rollout(tape, model, model.params, real.time_slice(0), z);
    const ad::Var loss = loss::transition_moment_loss(tape, real, fake, binning);
    check_loss(it, "transition-moment", loss.item());
    apply(opt, model.params, tape.backward(loss), cfg.grad_clip);
    model.meta.curve.record(it, loss.item());
    if (obs) obs(it, loss.item(), std::nullopt);
  }
}

data::PathBatch sample_cegen(const GeneratorModel& model, std::size_t n, std::uint64_t seed) {
  const CegenNets nets(model.config, model.dim);
  const Tensor x0 = initial_states(model, n, seed);
  const auto z = noise(derive_seed(seed, "cegen"), n, model.seq_len - 1, model.dim);
  ad::Tape tape;
  const auto path = nets.rollout(tape, model, model.params, x0, z);
  std::vector<Tensor> values;
  for (const auto& v : path) values.push_back(v.value());
  return to_batch(values, model.dim);
}

}  // namespace csynth::gen::detail

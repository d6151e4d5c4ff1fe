#include <cmath>

#include "csynth/cotgan_loss.hpp"
#include "csynth/nn.hpp"
#include "generator_impl.hpp"

namespace csynth::gen::detail {

namespace {

// Recurrent generator: y_t = W h_t + b with h driven by (z_t, x_0).
struct CotganGenerator {
  std::size_t noise_dim;
  nn::MinimalGru cell;
  nn::Dense head;

  CotganGenerator(const TrainConfig& cfg, std::size_t d)
      : noise_dim(cfg.effective_noise_dim(d)),
        cell("cotgan.generator.rnn", noise_dim + d, cfg.hidden),
        head("cotgan.generator.out", cfg.hidden, d) {}

  void init(ad::ParamSet& params, Rng& rng) const {
    cell.init(params, rng);
    head.init(params, rng);
  }

  /// Standardized path: x0 followed by seq_len - 1 generated points.
  std::vector<ad::Var> operator()(ad::Tape& tape, const ad::ParamSet& params, const Tensor& x0,
                                  const std::vector<Tensor>& z) const {
    const ad::Var start = tape.constant(x0);
    std::vector<ad::Var> inputs;
    for (const auto& zt : z) {
      const ad::Var parts[] = {tape.constant(zt), start};
      inputs.push_back(tape.concat_cols(parts));
    }
    std::vector<ad::Var> path{start};
    for (const auto& h : cell.run(tape, params, inputs)) path.push_back(head(tape, params, h));
    return path;
  }
};

std::vector<ad::Var> scaled(ad::Tape& tape, const std::vector<ad::Var>& xs, double factor) {
  std::vector<ad::Var> out;
  for (const auto& x : xs) out.push_back(tape.scale(x, factor));
  return out;
}

}  // namespace

void train_cotgan(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs) {
  const TrainConfig& cfg = model.config;
  const std::size_t d = model.dim;
  const CotganGenerator gen(cfg, d);
  const loss::CotganCritic critic("cotgan.critic", d, cfg.hidden, cfg.critic_features);
  Rng init_rng(derive_seed(cfg.seed, "cotgan-init"));
  gen.init(model.params, init_rng);
  critic.init(model.params, init_rng);
  ad::Adam opt_g(ad::AdamConfig{cfg.lr_generator});
  ad::Adam opt_c(ad::AdamConfig{cfg.lr_discriminator});
  const std::uint64_t noise_seed = derive_seed(cfg.seed, "cotgan-noise");
  // Costs are averaged per coordinate so epsilon acts on a unit scale.
  const double path_scale = 1.0 / std::sqrt(static_cast<double>(model.seq_len * d));

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto idx = minibatch(cfg.seed, it, normalized.samples(), cfg.batch_size);
    auto real_slices = slices(normalized, idx);
    for (auto& x : real_slices) x = standardize(model, x);
    const auto z = noise(derive_seed(noise_seed, it), idx.size(), model.seq_len - 1, gen.noise_dim);

    auto build = [&](ad::Tape& tape) {
      std::vector<ad::Var> real;
      for (const auto& x : real_slices) real.push_back(tape.constant(x));
      const auto fake = gen(tape, model.params, real_slices[0], z);
      return loss::cotgan_losses(tape, scaled(tape, real, path_scale), scaled(tape, fake, path_scale),
                                 critic, model.params, cfg.sinkhorn, cfg.martingale_penalty);
    };

    double gen_loss = 0.0;
    {
      ad::Tape tape;
      const auto losses = build(tape);
      gen_loss = losses.generator_loss.item();
      check_loss(it, "generator", gen_loss);
      apply(opt_g, model.params, tape.backward(losses.generator_loss).filtered({"cotgan.generator"}),
            cfg.grad_clip);
    }
    double critic_loss = 0.0;
    {
      ad::Tape tape;
      const auto losses = build(tape);
      critic_loss = losses.critic_loss.item();
      check_loss(it, "critic", critic_loss);
      apply(opt_c, model.params, tape.backward(losses.critic_loss).filtered({"cotgan.critic"}),
            cfg.grad_clip);
    }
    model.meta.curve.record(it, gen_loss, critic_loss);
    if (obs) obs(it, gen_loss, critic_loss);
  }
}

data::PathBatch sample_cotgan(const GeneratorModel& model, std::size_t n, std::uint64_t seed) {
  const CotganGenerator gen(model.config, model.dim);
  const Tensor x0 = standardize(model, initial_states(model, n, seed));
  const auto z = noise(derive_seed(seed, "cotgan"), n, model.seq_len - 1, gen.noise_dim);
  ad::Tape tape;
  const auto path = gen(tape, model.params, x0, z);
  std::vector<Tensor> values;
  for (const auto& v : path) values.push_back(destandardize(model, v.value()));
  return to_batch(values, model.dim);
}

}  // namespace csynth::gen::detail

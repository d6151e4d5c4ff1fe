#include <cmath>

#include "csynth/nn.hpp"
#include "generator_impl.hpp"

namespace csynth::gen::detail {

namespace {

struct RecurrentBlock {
  nn::MinimalGru cell;
  nn::Dense head;
  bool squash = true;

  RecurrentBlock(const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out, bool sigmoid_out)
      : cell(prefix + ".rnn", in, hidden), head(prefix + ".out", hidden, out), squash(sigmoid_out) {}

  void init(ad::ParamSet& params, Rng& rng) const {
    cell.init(params, rng);
    head.init(params, rng);
  }

  std::vector<ad::Var> operator()(ad::Tape& tape, const ad::ParamSet& params,
                                  std::span<const ad::Var> xs) const {
    std::vector<ad::Var> out;
    for (const auto& h : cell.run(tape, params, xs)) {
      const ad::Var y = head(tape, params, h);
      out.push_back(squash ? tape.sigmoid(y) : y);
    }
    return out;
  }
};

// Embedder, recovery, generator, supervisor and discriminator, all recurrent.
struct TsganNets {
  std::size_t noise_dim;
  RecurrentBlock embedder;
  RecurrentBlock recovery;
  RecurrentBlock generator;
  RecurrentBlock supervisor;
  RecurrentBlock discriminator;

  TsganNets(const TrainConfig& cfg, std::size_t d)
      : noise_dim(cfg.effective_noise_dim(d)),
        embedder("tsgan.embedder", d, cfg.hidden, cfg.hidden, true),
        recovery("tsgan.recovery", cfg.hidden, cfg.hidden, d, false),
        generator("tsgan.generator", noise_dim, cfg.hidden, cfg.hidden, true),
        supervisor("tsgan.supervisor", cfg.hidden, cfg.hidden, cfg.hidden, true),
        discriminator("tsgan.discriminator", cfg.hidden, cfg.hidden, 1, false) {}

  void init(ad::ParamSet& params, Rng& rng) const {
    embedder.init(params, rng);
    recovery.init(params, rng);
    generator.init(params, rng);
    supervisor.init(params, rng);
    discriminator.init(params, rng);
  }
};

std::vector<ad::Var> constants(ad::Tape& tape, const std::vector<Tensor>& xs) {
  std::vector<ad::Var> out;
  for (const auto& x : xs) out.push_back(tape.constant(x));
  return out;
}

ad::Var mean_over(ad::Tape& tape, const std::vector<ad::Var>& terms) {
  ad::Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = tape.add(total, terms[i]);
  return tape.scale(total, 1.0 / static_cast<double>(terms.size()));
}

ad::Var mse(ad::Tape& tape, ad::Var a, ad::Var b) {
  const ad::Var d = tape.sub(a, b);
  return tape.mean(tape.mul(d, d));
}

/// Next-step latent prediction error of the supervisor on real latents.
ad::Var supervised_loss(ad::Tape& tape, const TsganNets& nets, const ad::ParamSet& params,
                        const std::vector<ad::Var>& h) {
  const auto pred = nets.supervisor(tape, params, h);
  std::vector<ad::Var> terms;
  for (std::size_t t = 0; t + 1 < h.size(); ++t) terms.push_back(mse(tape, pred[t], h[t + 1]));
  return mean_over(tape, terms);
}

/// Per-step, per-dimension batch mean and std of generated vs real values.
ad::Var moment_loss(ad::Tape& tape, const std::vector<ad::Var>& fake, const std::vector<ad::Var>& real) {
  std::vector<ad::Var> terms;
  for (std::size_t t = 0; t < fake.size(); ++t) {
    const double inv_f = 1.0 / static_cast<double>(fake[t].rows());
    const double inv_r = 1.0 / static_cast<double>(real[t].rows());
    const ad::Var fm = tape.scale(tape.sum_rows(fake[t]), inv_f);
    const ad::Var rm = tape.scale(tape.sum_rows(real[t]), inv_r);
    const ad::Var fc = tape.sub(fake[t], fm);
    const ad::Var rc = tape.sub(real[t], rm);
    const ad::Var fs = tape.sqrt(tape.add_scalar(tape.scale(tape.sum_rows(tape.mul(fc, fc)), inv_f), 1e-6));
    const ad::Var rs = tape.sqrt(tape.add_scalar(tape.scale(tape.sum_rows(tape.mul(rc, rc)), inv_r), 1e-6));
    terms.push_back(tape.add(mse(tape, fm, rm), mse(tape, fs, rs)));
  }
  return mean_over(tape, terms);
}

ad::Var bce_logits(ad::Tape& tape, const std::vector<ad::Var>& logits, bool target_real) {
  std::vector<ad::Var> terms;
  for (const auto& l : logits) terms.push_back(tape.mean(tape.softplus(target_real ? tape.scale(l, -1.0) : l)));
  return mean_over(tape, terms);
}

std::vector<Tensor> standardized_slices(const GeneratorModel& model, const data::PathBatch& batch,
                                        const std::vector<std::size_t>& idx) {
  auto xs = slices(batch, idx);
  for (auto& x : xs) x = standardize(model, x);
  return xs;
}

}  // namespace

void train_tsgan(GeneratorModel& model, const data::PathBatch& normalized, const TrainObserver& obs) {
  const TrainConfig& cfg = model.config;
  const TsganNets nets(cfg, model.dim);
  Rng init_rng(derive_seed(cfg.seed, "tsgan-init"));
  nets.init(model.params, init_rng);
  ad::Adam opt_e(ad::AdamConfig{cfg.lr_generator});
  ad::Adam opt_g(ad::AdamConfig{cfg.lr_generator});
  ad::Adam opt_d(ad::AdamConfig{cfg.lr_discriminator});
  const std::uint64_t noise_seed = derive_seed(cfg.seed, "tsgan-noise");

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto idx = minibatch(cfg.seed, it, normalized.samples(), cfg.batch_size);
    const auto real = standardized_slices(model, normalized, idx);
    const auto z = noise(derive_seed(noise_seed, it), idx.size(), model.seq_len, nets.noise_dim);

    // Embedder and recovery: reconstruction plus supervised latent dynamics.
    double loss_e = 0.0;
    {
      ad::Tape tape;
      const auto x = constants(tape, real);
      const auto h = nets.embedder(tape, model.params, x);
      const auto xr = nets.recovery(tape, model.params, h);
      std::vector<ad::Var> terms;
      for (std::size_t t = 0; t < x.size(); ++t) terms.push_back(mse(tape, xr[t], x[t]));
      const ad::Var rec = mean_over(tape, terms);
      const ad::Var sup = supervised_loss(tape, nets, model.params, h);
      const ad::Var total = tape.add(tape.scale(rec, cfg.w_reconstruction), tape.scale(sup, cfg.w_supervised));
      loss_e = total.item();
      check_loss(it, "embedder", loss_e);
      apply(opt_e, model.params, tape.backward(total).filtered({"tsgan.embedder", "tsgan.recovery"}),
            cfg.grad_clip);
    }

    // Generator and supervisor: fool the discriminator in latent space.
    double loss_g = 0.0;
    {
      ad::Tape tape;
      const auto x = constants(tape, real);
      const auto h = nets.embedder(tape, model.params, x);
      const auto e_hat = nets.generator(tape, model.params, constants(tape, z));
      const auto h_hat = nets.supervisor(tape, model.params, e_hat);
      const ad::Var adv = bce_logits(tape, nets.discriminator(tape, model.params, h_hat), true);
      const ad::Var sup = supervised_loss(tape, nets, model.params, h);
      ad::Var total = tape.add(tape.scale(adv, cfg.w_adversarial), tape.scale(sup, cfg.w_supervised));
      if (cfg.w_moment > 0.0) {
        const auto x_hat = nets.recovery(tape, model.params, h_hat);
        total = tape.add(total, tape.scale(moment_loss(tape, x_hat, x), cfg.w_moment));
      }
      loss_g = total.item();
      check_loss(it, "generator", loss_g);
      apply(opt_g, model.params, tape.backward(total).filtered({"tsgan.generator", "tsgan.supervisor"}),
            cfg.grad_clip);
    }

    // Discriminator: real latents vs supervised generated latents.
    double loss_d = 0.0;
    {
      ad::Tape tape;
      const auto h = nets.embedder(tape, model.params, constants(tape, real));
      const auto e_hat = nets.generator(tape, model.params, constants(tape, z));
      const auto h_hat = nets.supervisor(tape, model.params, e_hat);
      const ad::Var total = tape.add(bce_logits(tape, nets.discriminator(tape, model.params, h), true),
                                     bce_logits(tape, nets.discriminator(tape, model.params, h_hat), false));
      loss_d = total.item();
      check_loss(it, "discriminator", loss_d);
      apply(opt_d, model.params, tape.backward(total).filtered({"tsgan.discriminator"}), cfg.grad_clip);
    }

    model.meta.curve.record(it, loss_e + loss_g, loss_d);
    if (obs) obs(it, loss_e + loss_g, loss_d);
  }
}

data::PathBatch sample_tsgan(const GeneratorModel& model, std::size_t n, std::uint64_t seed) {
  const TsganNets nets(model.config, model.dim);
  const auto z = noise(derive_seed(seed, "tsgan"), n, model.seq_len, nets.noise_dim);
  ad::Tape tape;
  const auto e_hat = nets.generator(tape, model.params, constants(tape, z));
  const auto h_hat = nets.supervisor(tape, model.params, e_hat);
  const auto x_hat = nets.recovery(tape, model.params, h_hat);
  std::vector<Tensor> values;
  for (const auto& v : x_hat) values.push_back(destandardize(model, v.value()));
  return to_batch(values, model.dim);
}

}  // namespace csynth::gen::detail

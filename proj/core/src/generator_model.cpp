#include "csynth/generator_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "csynth/errors.hpp"
#include "generator_impl.hpp"

namespace csynth::gen {

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void LossCurve::record(std::size_t iter, double gen, std::optional<double> disc) {
  iteration.push_back(iter);
  gen_loss.push_back(gen);
  if (disc) {
    has_discriminator = true;
    disc_loss.push_back(*disc);
  }
}

std::string LossCurve::to_csv() const {
  std::string out = "iteration,gen_loss,disc_loss\n";
  for (std::size_t i = 0; i < iteration.size(); ++i) {
    out += std::to_string(iteration[i]);
    out += ',';
    out += shortest(gen_loss[i]);
    out += ',';
    if (has_discriminator && i < disc_loss.size()) out += shortest(disc_loss[i]);
    out += '\n';
  }
  return out;
}

void GeneratorModel::validate() const {
  if (seq_len < 2) throw ConfigError("generator: seq_len must be >= 2");
  if (dim == 0) throw ConfigError("generator: dim must be >= 1");
  if (labels.size() != dim) throw ConfigError("generator: labels do not match dim");
  if (kind == Kind::kGbm) {
    gbm.validate();
    if (gbm.dims() != dim) throw ConfigError("generator: gbm dimension mismatch");
    if (!aux.count("gbm.s0")) throw ConfigError("generator: gbm model lacks default s0");
    return;
  }
  if (normalizer.dims() != dim) throw ConfigError("generator: normalizer dimension mismatch");
  for (const char* key : {"state.center", "state.scale", "state.initial"}) {
    if (!aux.count(key)) throw ConfigError(std::string("generator: missing aux block '") + key + "'");
  }
  if (params.size() == 0) throw ConfigError("generator: no parameters");
}

data::PathBatch GeneratorModel::sample(std::size_t n, std::uint64_t seed,
                                       std::span<const double> s0) const {
  if (n == 0) throw ShapeError("sample: n must be >= 1");
  if (!s0.empty() && s0.size() != dim) {
    throw ShapeError("sample: s0 has " + std::to_string(s0.size()) + " entries, model has " +
                     std::to_string(dim) + " dims");
  }
  data::PathBatch out;
  if (kind == Kind::kGbm) {
    const Tensor& def = aux.at("gbm.s0");
    const std::span<const double> start = s0.empty() ? def.data() : s0;
    return simulate_gbm(gbm, n, seq_len, start, seed, labels);
  }
  data::PathBatch norm;
  switch (kind) {
    case Kind::kCegen: norm = detail::sample_cegen(*this, n, seed); break;
    case Kind::kTsgan: norm = detail::sample_tsgan(*this, n, seed); break;
    case Kind::kCotgan: norm = detail::sample_cotgan(*this, n, seed); break;
    case Kind::kSiggan: norm = detail::sample_siggan(*this, n, seed); break;
    case Kind::kGbm: break;
  }
  norm.set_labels(labels);
  norm.set_dt(dt);
  if (!norm.data().empty() &&
      !std::all_of(norm.data().begin(), norm.data().end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("numeric overflow: " + std::string(to_string(kind)) + " produced non-finite samples");
  }
  if (normalizer.mode() == data::NormalizationMode::kInitialValueRatio) {
    // Keep ratio paths positive so they can be rebased.
    for (double& v : norm.data()) v = std::max(v, 1e-6);
  }
  out = normalizer.invert(norm);
  if (!s0.empty()) {
    for (double& v : out.data()) v = std::max(v, 1e-12);
    out = data::rebase(out, s0);
  }
  return out;
}

GeneratorModel train_generator(const data::PathBatch& prices, const TrainConfig& cfg,
                               const TrainObserver& observer) {
  cfg.validate();
  prices.validate();
  GeneratorModel model;
  model.kind = cfg.kind;
  model.config = cfg;
  model.seq_len = prices.steps();
  model.dim = prices.dims();
  model.dt = prices.dt();
  model.labels = prices.labels();
  model.params = ad::ParamSet(cfg.seed);
  model.meta.seed = cfg.seed;
  model.meta.config_hash = cfg.hash();
  model.meta.curve.has_discriminator = has_discriminator(cfg.kind);

  if (cfg.kind == Kind::kGbm) {
    model.gbm = stoch::calibrate_gbm(prices);
    Tensor s0 = Tensor::matrix(1, model.dim);
    for (std::size_t s = 0; s < prices.samples(); ++s) {
      for (std::size_t k = 0; k < model.dim; ++k) s0(0, k) += prices(s, 0, k);
    }
    for (std::size_t k = 0; k < model.dim; ++k) s0(0, k) /= static_cast<double>(prices.samples());
    model.aux["gbm.s0"] = s0;
    model.meta.iterations = 0;
    return model;
  }

  model.normalizer = data::Normalizer::fit(prices, cfg.normalization);
  const data::PathBatch norm = model.normalizer.apply(prices);
  detail::fit_state_scaling(model, norm);
  model.aux["state.initial"] = data::initial_values(norm);
  switch (cfg.kind) {
    case Kind::kCegen: detail::train_cegen(model, norm, observer); break;
    case Kind::kTsgan: detail::train_tsgan(model, norm, observer); break;
    case Kind::kCotgan: detail::train_cotgan(model, norm, observer); break;
    case Kind::kSiggan: detail::train_siggan(model, norm, observer); break;
    case Kind::kGbm: break;
  }
  model.meta.iterations = cfg.iterations;
  return model;
}

namespace detail {

void fit_state_scaling(GeneratorModel& model, const data::PathBatch& normalized) {
  const std::size_t d = normalized.dims();
  Tensor center = Tensor::matrix(1, d);
  Tensor scale = Tensor::matrix(1, d);
  const double count = static_cast<double>(normalized.samples() * normalized.steps());
  for (std::size_t k = 0; k < d; ++k) {
    double m = 0.0;
    for (std::size_t s = 0; s < normalized.samples(); ++s) {
      for (std::size_t t = 0; t < normalized.steps(); ++t) m += normalized(s, t, k);
    }
    m /= count;
    double v = 0.0;
    for (std::size_t s = 0; s < normalized.samples(); ++s) {
      for (std::size_t t = 0; t < normalized.steps(); ++t) {
        const double e = normalized(s, t, k) - m;
        v += e * e;
      }
    }
    center(0, k) = m;
    scale(0, k) = std::max(std::sqrt(v / count), 1e-8);
  }
  model.aux["state.center"] = center;
  model.aux["state.scale"] = scale;
}

Tensor standardize(const GeneratorModel& model, const Tensor& slice) {
  const Tensor& c = model.aux.at("state.center");
  const Tensor& sc = model.aux.at("state.scale");
  Tensor out = slice;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t k = 0; k < out.cols(); ++k) out(i, k) = (slice(i, k) - c(0, k)) / sc(0, k);
  }
  return out;
}

Tensor destandardize(const GeneratorModel& model, const Tensor& slice) {
  const Tensor& c = model.aux.at("state.center");
  const Tensor& sc = model.aux.at("state.scale");
  Tensor out = slice;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t k = 0; k < out.cols(); ++k) out(i, k) = slice(i, k) * sc(0, k) + c(0, k);
  }
  return out;
}

std::vector<Tensor> noise(std::uint64_t seed, std::size_t n, std::size_t steps, std::size_t width) {
  std::vector<Tensor> out(steps, Tensor::matrix(n, width));
  for (std::size_t s = 0; s < n; ++s) {
    Rng rng(seed, s);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t k = 0; k < width; ++k) out[t](s, k) = rng.normal();
    }
  }
  return out;
}

std::vector<std::size_t> minibatch(std::uint64_t seed, std::size_t iteration, std::size_t population,
                                   std::size_t size) {
  Rng rng(derive_seed(seed, "minibatch"), iteration);
  std::vector<std::size_t> idx(size);
  for (auto& i : idx) i = rng.below(population);
  return idx;
}

std::vector<Tensor> slices(const data::PathBatch& batch, const std::vector<std::size_t>& rows) {
  std::vector<Tensor> out(batch.steps(), Tensor::matrix(rows.size(), batch.dims()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t t = 0; t < batch.steps(); ++t) {
      for (std::size_t k = 0; k < batch.dims(); ++k) out[t](r, k) = batch(rows[r], t, k);
    }
  }
  return out;
}

Tensor initial_states(const GeneratorModel& model, std::size_t n, std::uint64_t seed) {
  const Tensor& bank = model.aux.at("state.initial");
  Tensor out = Tensor::matrix(n, bank.cols());
  const std::uint64_t key = derive_seed(seed, "initial-state");
  for (std::size_t s = 0; s < n; ++s) {
    Rng rng(key, s);
    const std::size_t row = rng.below(bank.rows());
    for (std::size_t k = 0; k < bank.cols(); ++k) out(s, k) = bank(row, k);
  }
  return out;
}

void check_loss(std::size_t iteration, const std::string& term, double value) {
  if (!std::isfinite(value)) {
    throw NumericError("training aborted at iteration " + std::to_string(iteration) + ": " + term +
                       " loss is not finite");
  }
  if (std::abs(value) > 1e6) {
    throw NumericError("training aborted at iteration " + std::to_string(iteration) + ": " + term +
                       " loss " + std::to_string(value) + " exceeds divergence guard 1e6");
  }
}

void apply(ad::Adam& opt, ad::ParamSet& params, ad::Gradients grads, double clip) {
  ad::clip_global_norm(grads, clip);
  opt.step(params, grads);
}

data::PathBatch to_batch(const std::vector<Tensor>& steps, std::size_t dims) {
  const std::size_t n = steps.front().rows();
  data::PathBatch out(n, steps.size(), dims);
  for (std::size_t t = 0; t < steps.size(); ++t) out.set_time_slice(t, steps[t]);
  return out;
}

}  // namespace detail

}  // namespace csynth::gen

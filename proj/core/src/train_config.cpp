#include "csynth/train_config.hpp"


#include "csynth/errors.hpp"
#include "csynth/hash.hpp"

namespace csynth::gen {

std::string_view to_string(Kind kind) noexcept {
  switch (kind) {
    case Kind::kGbm: return "gbm";
    case Kind::kCegen: return "cegen";
    case Kind::kTsgan: return "tsgan";
    case Kind::kCotgan: return "cotgan";
    case Kind::kSiggan: return "siggan";
  }
  return "?";
}

Kind parse_kind(std::string_view text) {
  for (Kind k : {Kind::kGbm, Kind::kCegen, Kind::kTsgan, Kind::kCotgan, Kind::kSiggan}) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown generator kind '" + std::string(text) +
                    "' (expected gbm, cegen, tsgan, cotgan or siggan)");
}

bool has_discriminator(Kind kind) noexcept { return kind == Kind::kTsgan || kind == Kind::kCotgan; }

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("train config: ") + name + " must be >= 1");
  };
  positive(batch_size, "batch_size");
  positive(hidden, "hidden");
  positive(layers, "layers");
  positive(critic_features, "critic_features");
  positive(sig_depth, "sig_depth");
  positive(past_sig_depth, "past_sig_depth");
  positive(past_steps, "past_steps");
  positive(future_steps, "future_steps");
  positive(mc_samples, "mc_samples");
  positive(bins, "bins");
  if (!(lr_generator > 0.0) || !(lr_discriminator > 0.0)) {
    throw ConfigError("train config: learning rates must be > 0");
  }
  if (!(grad_clip > 0.0)) throw ConfigError("train config: grad_clip must be > 0");
  if (!(ridge >= 0.0)) throw ConfigError("train config: ridge must be >= 0");
  if (!(martingale_penalty >= 0.0)) throw ConfigError("train config: martingale_penalty must be >= 0");
  if (!(w_reconstruction >= 0.0) || !(w_supervised >= 0.0) || !(w_adversarial >= 0.0) ||
      !(w_moment >= 0.0)) {
    throw ConfigError("train config: loss weights must be >= 0");
  }
  sinkhorn.validate();
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(kind));
  j["iterations"] = iterations;
  j["batch_size"] = batch_size;
  j["hidden"] = hidden;
  j["layers"] = layers;
  j["noise_dim"] = noise_dim;
  j["lr_generator"] = lr_generator;
  j["lr_discriminator"] = lr_discriminator;
  j["grad_clip"] = grad_clip;
  j["seed"] = seed;
  j["normalization"] = std::string(data::to_string(normalization));
  j["sinkhorn"] = {{"epsilon", sinkhorn.epsilon},
                   {"iterations", sinkhorn.iterations},
                   {"tolerance", sinkhorn.tolerance},
                   {"causal_weight", sinkhorn.causal_weight}};
  j["critic_features"] = critic_features;
  j["martingale_penalty"] = martingale_penalty;
  j["sig_depth"] = sig_depth;
  j["sig_time_augment"] = sig_time_augment;
  j["sig_lead_lag"] = sig_lead_lag;
  j["sig_unbiased"] = sig_unbiased;
  j["past_sig_depth"] = past_sig_depth;
  j["past_steps"] = past_steps;
  j["future_steps"] = future_steps;
  j["ridge"] = ridge;
  j["mc_samples"] = mc_samples;
  j["bins"] = bins;
  j["bin_dim"] = bin_dim;
  j["transition_debias"] = transition_debias;
  j["w_reconstruction"] = w_reconstruction;
  j["w_supervised"] = w_supervised;
  j["w_adversarial"] = w_adversarial;
  j["w_moment"] = w_moment;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");
  TrainConfig c;
  const auto known = c.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("train config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("kind")) c.kind = parse_kind(j.at("kind").get<std::string>());
    c.iterations = j.value("iterations", c.iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.hidden = j.value("hidden", c.hidden);
    c.layers = j.value("layers", c.layers);
    c.noise_dim = j.value("noise_dim", c.noise_dim);
    c.lr_generator = j.value("lr_generator", c.lr_generator);
    c.lr_discriminator = j.value("lr_discriminator", c.lr_discriminator);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.seed = j.value("seed", c.seed);
    if (j.contains("normalization")) {
      c.normalization = data::parse_normalization(j.at("normalization").get<std::string>());
    }
    if (j.contains("sinkhorn")) {
      const auto& s = j.at("sinkhorn");
      for (const auto& [key, value] : s.items()) {
        if (!known["sinkhorn"].contains(key)) throw ConfigError("train config: unknown key 'sinkhorn." + key + "'");
      }
      c.sinkhorn.epsilon = s.value("epsilon", c.sinkhorn.epsilon);
      c.sinkhorn.iterations = s.value("iterations", c.sinkhorn.iterations);
      c.sinkhorn.tolerance = s.value("tolerance", c.sinkhorn.tolerance);
      c.sinkhorn.causal_weight = s.value("causal_weight", c.sinkhorn.causal_weight);
    }
    c.critic_features = j.value("critic_features", c.critic_features);
    c.martingale_penalty = j.value("martingale_penalty", c.martingale_penalty);
    c.sig_depth = j.value("sig_depth", c.sig_depth);
    c.sig_time_augment = j.value("sig_time_augment", c.sig_time_augment);
    c.sig_lead_lag = j.value("sig_lead_lag", c.sig_lead_lag);
    c.sig_unbiased = j.value("sig_unbiased", c.sig_unbiased);
    c.past_sig_depth = j.value("past_sig_depth", c.past_sig_depth);
    c.past_steps = j.value("past_steps", c.past_steps);
    c.future_steps = j.value("future_steps", c.future_steps);
    c.ridge = j.value("ridge", c.ridge);
    c.mc_samples = j.value("mc_samples", c.mc_samples);
    c.bins = j.value("bins", c.bins);
    c.bin_dim = j.value("bin_dim", c.bin_dim);
    c.transition_debias = j.value("transition_debias", c.transition_debias);
    c.w_reconstruction = j.value("w_reconstruction", c.w_reconstruction);
    c.w_supervised = j.value("w_supervised", c.w_supervised);
    c.w_adversarial = j.value("w_adversarial", c.w_adversarial);
    c.w_moment = j.value("w_moment", c.w_moment);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string TrainConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

}  // namespace csynth::gen

#include "csynth/nn.hpp"

#include <cmath>

#include "csynth/errors.hpp"

namespace csynth::nn {

using ad::Var;

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w = Tensor::matrix(fan_in, fan_out);
  for (double& v : w.data()) v = rng.uniform(-a, a);
  return w;
}

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::kTanh: return ad::tanh(x);
    case Activation::kRelu: return ad::relu(x);
    case Activation::kSigmoid: return ad::sigmoid(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

Dense::Dense(std::string prefix, std::size_t in, std::size_t out)
    : prefix_(std::move(prefix)), in_(in), out_(out) {
  if (in == 0 || out == 0) throw ShapeError("dense '" + prefix_ + "': zero width");
}

void Dense::init(ad::ParamSet& params, Rng& rng) const {
  params.add(prefix_ + ".W", xavier_uniform(in_, out_, rng));
  params.add(prefix_ + ".b", Tensor::matrix(1, out_, 0.0));
}

Var Dense::operator()(ad::Tape& tape, const ad::ParamSet& params, Var x) const {
  Var w = tape.param(params, prefix_ + ".W");
  Var b = tape.param(params, prefix_ + ".b");
  return ad::matmul(x, w) + b;
}

Mlp::Mlp(std::string prefix, std::size_t in, std::size_t hidden, std::size_t layers,
         std::size_t out, Activation act)
    : act_(act) {
  std::size_t width = in;
  for (std::size_t l = 0; l < layers; ++l) {
    layers_.emplace_back(prefix + ".l" + std::to_string(l), width, hidden);
    width = hidden;
  }
  layers_.emplace_back(prefix + ".out", width, out);
}

void Mlp::init(ad::ParamSet& params, Rng& rng) const {
  for (const auto& layer : layers_) layer.init(params, rng);
}

Var Mlp::operator()(ad::Tape& tape, const ad::ParamSet& params, Var x) const {
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    x = activate(layers_[l](tape, params, x), act_);
  }
  return layers_.back()(tape, params, x);
}

std::size_t Mlp::in() const noexcept { return layers_.empty() ? 0 : layers_.front().in(); }
std::size_t Mlp::out() const noexcept { return layers_.empty() ? 0 : layers_.back().out(); }

MinimalGru::MinimalGru(std::string prefix, std::size_t in, std::size_t hidden)
    : prefix_(std::move(prefix)), in_(in), hidden_(hidden) {
  if (in == 0 || hidden == 0) throw ShapeError("recurrent '" + prefix_ + "': zero width");
}

void MinimalGru::init(ad::ParamSet& params, Rng& rng) const {
  params.add(prefix_ + ".Wf", xavier_uniform(in_, hidden_, rng));
  params.add(prefix_ + ".Uf", xavier_uniform(hidden_, hidden_, rng));
  params.add(prefix_ + ".bf", Tensor::matrix(1, hidden_, 0.0));
  params.add(prefix_ + ".Wh", xavier_uniform(in_, hidden_, rng));
  params.add(prefix_ + ".Uh", xavier_uniform(hidden_, hidden_, rng));
  params.add(prefix_ + ".bh", Tensor::matrix(1, hidden_, 0.0));
}

Var MinimalGru::step(ad::Tape& tape, const ad::ParamSet& params, Var x, Var h) const {
  auto p = [&](const char* suffix) { return tape.param(params, prefix_ + suffix); };
  Var f = ad::sigmoid(ad::matmul(x, p(".Wf")) + ad::matmul(h, p(".Uf")) + p(".bf"));
  Var cand = ad::tanh(ad::matmul(x, p(".Wh")) + ad::matmul(f * h, p(".Uh")) + p(".bh"));
  return h + f * (cand - h);
}

std::vector<Var> MinimalGru::run(ad::Tape& tape, const ad::ParamSet& params,
                                 std::span<const Var> xs) const {
  std::vector<Var> states;
  if (xs.empty()) return states;
  states.reserve(xs.size());
  Var h = tape.constant(Tensor::matrix(xs.front().rows(), hidden_, 0.0));
  for (const Var& x : xs) {
    h = step(tape, params, x, h);
    states.push_back(h);
  }
  return states;
}

}  // namespace csynth::nn

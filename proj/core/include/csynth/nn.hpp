#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csynth/params.hpp"
#include "csynth/rng.hpp"
#include "csynth/tape.hpp"

namespace csynth::nn {

enum class Activation { kTanh, kRelu, kSigmoid, kIdentity };

/// Glorot/Xavier uniform (fan_in x fan_out) matrix.
[[nodiscard]] Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

ad::Var activate(ad::Var x, Activation act);

/// Affine layer with parameters "<prefix>.W" (in x out) and "<prefix>.b" (1 x out).
class Dense {
 public:
  Dense() = default;
  Dense(std::string prefix, std::size_t in, std::size_t out);

  void init(ad::ParamSet& params, Rng& rng) const;
  ad::Var operator()(ad::Tape& tape, const ad::ParamSet& params, ad::Var x) const;

  [[nodiscard]] std::size_t in() const noexcept { return in_; }
  [[nodiscard]] std::size_t out() const noexcept { return out_; }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

/// `layers` hidden layers of `hidden` units with one activation, then a linear head.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string prefix, std::size_t in, std::size_t hidden, std::size_t layers, std::size_t out,
      Activation act = Activation::kTanh);

  void init(ad::ParamSet& params, Rng& rng) const;
  ad::Var operator()(ad::Tape& tape, const ad::ParamSet& params, ad::Var x) const;

  [[nodiscard]] std::size_t in() const noexcept;
  [[nodiscard]] std::size_t out() const noexcept;

 private:
  std::vector<Dense> layers_;
  Activation act_ = Activation::kTanh;
};

/// Minimal gated recurrent unit (one forget gate):
///   f  = sigmoid(x Wf + h Uf + bf)
///   h~ = tanh(x Wh + (f * h) Uh + bh)
///   h' = h + f * (h~ - h)
class MinimalGru {
 public:
  MinimalGru() = default;
  MinimalGru(std::string prefix, std::size_t in, std::size_t hidden);

  void init(ad::ParamSet& params, Rng& rng) const;
  ad::Var step(ad::Tape& tape, const ad::ParamSet& params, ad::Var x, ad::Var h) const;
  /// Hidden state after each input, starting from a zero state.
  std::vector<ad::Var> run(ad::Tape& tape, const ad::ParamSet& params,
                           std::span<const ad::Var> xs) const;

  [[nodiscard]] std::size_t hidden() const noexcept { return hidden_; }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
};

}  // namespace csynth::nn

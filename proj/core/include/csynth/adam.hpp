#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "csynth/params.hpp"
#include "csynth/tape.hpp"

namespace csynth::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

/// Bias-corrected Adam. Moments are created lazily for each parameter the
/// first time it receives a gradient; the step counter is global.
class Adam {
 public:
  explicit Adam(AdamConfig config = {});

  /// Update every parameter named in `grads`. Throws on unknown names or shape mismatch.
  void step(ParamSet& params, const Gradients& grads);

  [[nodiscard]] std::size_t step_count() const noexcept { return step_; }
  [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }
  void set_learning_rate(double lr);
  [[nodiscard]] const Tensor& first_moment(const std::string& name) const { return m_.at(name); }
  [[nodiscard]] const Tensor& second_moment(const std::string& name) const { return v_.at(name); }

 private:
  AdamConfig config_;
  std::size_t step_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

/// Rescale so the global L2 norm is at most max_norm. Returns the norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

}  // namespace csynth::ad

#include "csynth/adam.hpp"

#include <cmath>

#include "csynth/errors.hpp"

namespace csynth::ad {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("adam: learning rate must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be > 0");
}

Adam::Adam(AdamConfig config) : config_(config) { config_.validate(); }

void Adam::set_learning_rate(double lr) {
  if (!(lr >= 0.0)) throw ConfigError("adam: learning rate must be >= 0");
  config_.learning_rate = lr;
}

void Adam::step(ParamSet& params, const Gradients& grads) {
  for (const auto& [name, g] : grads) {
    const Tensor& p = params.at(name);
    if (g.size() != p.size() || g.rows() != p.rows()) {
      throw ShapeError("adam: gradient " + shape_string(g.shape()) + " does not match parameter '" +
                       name + "' " + shape_string(p.shape()));
    }
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (const auto& [name, g] : grads) {
    Tensor& p = params.mutable_at(name);
    auto [mit, _m] = m_.try_emplace(name, Tensor(p.shape(), 0.0));
    auto [vit, _v] = v_.try_emplace(name, Tensor(p.shape(), 0.0));
    auto m = mit->second.data();
    auto v = vit->second.data();
    auto w = p.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gd[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gd[i] * gd[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace csynth::ad

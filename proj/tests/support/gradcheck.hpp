#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "csynth/nn.hpp"
#include "csynth/rng.hpp"
#include "csynth/tape.hpp"

namespace csynth::testing {

using Builder = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

inline Tensor random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

/// Entries bounded away from zero (for relu and friends).
inline Tensor random_signed(Rng& rng, std::size_t r, std::size_t c) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) {
    const double m = 0.2 + 0.8 * rng.uniform();
    v = rng.uniform() < 0.5 ? -m : m;
  }
  return t;
}

inline double evaluate(const Builder& f, const std::vector<Tensor>& inputs) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& x : inputs) vars.push_back(tape.constant(x));
  return f(tape, vars).item();
}

/// ||analytic - central difference|| / max(||analytic||, ||fd||) over all input entries.
inline double gradient_rel_error(const Builder& f, std::vector<Tensor> inputs, double h = 1e-5) {
  std::vector<double> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& x : inputs) vars.push_back(tape.input(x));
    const ad::Var out = f(tape, vars);
    (void)tape.backward(out);
    for (const auto& v : vars) {
      const Tensor g = tape.grad(v);
      analytic.insert(analytic.end(), g.data().begin(), g.data().end());
    }
  }
  std::vector<double> numeric;
  for (auto& x : inputs) {
    for (double& v : x.data()) {
      const double keep = v;
      v = keep + h;
      const double up = evaluate(f, inputs);
      v = keep - h;
      const double down = evaluate(f, inputs);
      v = keep;
      numeric.push_back((up - down) / (2.0 * h));
    }
  }
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return std::sqrt(diff) / scale;
}

using ParamBuilder = std::function<ad::Var(ad::Tape&, const ad::ParamSet&)>;

/// Same norm-wise relative error, over every parameter entry.
inline double param_gradient_rel_error(const ParamBuilder& f, ad::ParamSet params, double h = 1e-5) {
  std::vector<double> analytic;
  {
    ad::Tape tape;
    const ad::Var out = f(tape, params);
    const auto grads = tape.backward(out).dense(params);
    for (const auto& [name, g] : grads) analytic.insert(analytic.end(), g.data().begin(), g.data().end());
  }
  std::vector<double> numeric;
  for (const auto& name : params.names()) {
    for (double& v : params.mutable_at(name).data()) {
      const double keep = v;
      v = keep + h;
      double up = 0.0;
      {
        ad::Tape t;
        up = f(t, params).item();
      }
      v = keep - h;
      double down = 0.0;
      {
        ad::Tape t;
        down = f(t, params).item();
      }
      v = keep;
      numeric.push_back((up - down) / (2.0 * h));
    }
  }
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

struct GradCase {
  std::string op;
  double rel_error = 0.0;
};

/// Reduce an arbitrary output to a scalar with fixed random weights.
inline ad::Var weighted_sum(ad::Tape& tape, ad::Var y, std::uint64_t seed) {
  Rng rng(seed, 99);
  return tape.sum(tape.mul(y, tape.constant(random_matrix(rng, y.rows(), y.cols()))));
}

/// `count` randomized gradient checks cycling through the op vocabulary.
inline std::vector<GradCase> random_gradient_cases(std::size_t count, std::uint64_t seed) {
  std::vector<GradCase> out;
  const std::vector<std::string> ops{"matmul",  "add",        "add_broadcast_row", "sub_broadcast_col",
                                     "mul",     "mul_scalar", "scale",             "add_scalar",
                                     "tanh",    "sigmoid",    "relu",              "softplus",
                                     "exp",     "log",        "sqrt",              "sum",
                                     "mean",    "sum_rows",   "sum_cols",          "slice_cols",
                                     "gather",  "concat",     "transpose",         "row_outer",
                                     "mlp",     "minimal_gru"};
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(seed, i);
    const std::string& op = ops[i % ops.size()];
    const std::size_t r = 1 + rng.below(4);
    const std::size_t c = 1 + rng.below(4);
    const std::size_t k = 1 + rng.below(4);
    const std::uint64_t wseed = derive_seed(seed, i);
    std::vector<Tensor> in;
    Builder f;
    if (op == "matmul") {
      in = {random_matrix(rng, r, k), random_matrix(rng, k, c)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.matmul(x[0], x[1]), wseed); };
    } else if (op == "add" || op == "mul") {
      in = {random_matrix(rng, r, c), random_matrix(rng, r, c)};
      const bool add = op == "add";
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        return weighted_sum(t, add ? t.add(x[0], x[1]) : t.mul(x[0], x[1]), wseed);
      };
    } else if (op == "add_broadcast_row") {
      in = {random_matrix(rng, r, c), random_matrix(rng, 1, c)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.add(x[0], x[1]), wseed); };
    } else if (op == "sub_broadcast_col") {
      in = {random_matrix(rng, r, c), random_matrix(rng, r, 1)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.sub(x[0], x[1]), wseed); };
    } else if (op == "mul_scalar") {
      in = {random_matrix(rng, r, c), random_matrix(rng, 1, 1)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.mul(x[1], x[0]), wseed); };
    } else if (op == "scale" || op == "add_scalar") {
      in = {random_matrix(rng, r, c)};
      const double s = rng.uniform() * 4.0 - 2.0;
      const bool sc = op == "scale";
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        const ad::Var y = sc ? t.scale(x[0], s) : t.add_scalar(x[0], s);
        return weighted_sum(t, t.mul(y, y), wseed);
      };
    } else if (op == "tanh" || op == "sigmoid" || op == "softplus" || op == "exp") {
      in = {random_matrix(rng, r, c, -2.0, 2.0)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        const ad::Var y = op == "tanh" ? t.tanh(x[0]) : op == "sigmoid" ? t.sigmoid(x[0])
                          : op == "softplus" ? t.softplus(x[0]) : t.exp(x[0]);
        return weighted_sum(t, y, wseed);
      };
    } else if (op == "relu") {
      in = {random_signed(rng, r, c)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.relu(x[0]), wseed); };
    } else if (op == "log" || op == "sqrt") {
      in = {random_matrix(rng, r, c, 0.5, 3.0)};
      const bool lg = op == "log";
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        return weighted_sum(t, lg ? t.log(x[0]) : t.sqrt(x[0]), wseed);
      };
    } else if (op == "sum" || op == "mean") {
      in = {random_matrix(rng, r, c)};
      const bool s = op == "sum";
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        const ad::Var y = s ? t.sum(t.mul(x[0], x[0])) : t.mean(t.mul(x[0], x[0]));
        return t.mul(y, y);
      };
    } else if (op == "sum_rows" || op == "sum_cols") {
      in = {random_matrix(rng, r, c)};
      const bool rows = op == "sum_rows";
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        const ad::Var y = rows ? t.sum_rows(x[0]) : t.sum_cols(x[0]);
        return weighted_sum(t, t.mul(y, y), wseed);
      };
    } else if (op == "slice_cols") {
      const std::size_t cc = c + 1;
      in = {random_matrix(rng, r, cc)};
      const std::size_t b = rng.below(cc);
      const std::size_t e = b + 1 + rng.below(cc - b);
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.slice_cols(x[0], b, e), wseed); };
    } else if (op == "gather") {
      in = {random_matrix(rng, r, c)};
      std::vector<std::size_t> idx(r + 2);
      for (auto& v : idx) v = rng.below(r);
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.gather_rows(x[0], idx), wseed); };
    } else if (op == "concat") {
      in = {random_matrix(rng, r, c), random_matrix(rng, r, k)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        const std::vector<ad::Var> parts{x[0], x[1], x[0]};
        return weighted_sum(t, t.concat_cols(parts), wseed);
      };
    } else if (op == "transpose") {
      in = {random_matrix(rng, r, c)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.transpose(x[0]), wseed); };
    } else if (op == "row_outer") {
      in = {random_matrix(rng, r, c), random_matrix(rng, r, k)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) { return weighted_sum(t, t.row_outer(x[0], x[1]), wseed); };
    } else if (op == "mlp") {
      const nn::Mlp net("g", c, 5, 2, k, nn::Activation::kTanh);
      ad::ParamSet params;
      Rng init(seed, 1000 + i);
      net.init(params, init);
      const Tensor x = random_matrix(rng, r, c);
      out.push_back({op, param_gradient_rel_error(
                             [=](ad::Tape& t, const ad::ParamSet& p) {
                               return weighted_sum(t, net(t, p, t.constant(x)), wseed);
                             },
                             params)});
      continue;
    } else {
      const nn::MinimalGru cell("m", c, k);
      ad::ParamSet params;
      Rng init(seed, 2000 + i);
      cell.init(params, init);
      in = {random_matrix(rng, r, c), random_matrix(rng, r, c), random_matrix(rng, r, k)};
      f = [=](ad::Tape& t, std::span<const ad::Var> x) {
        ad::Var h = cell.step(t, params, x[0], x[2]);
        h = cell.step(t, params, x[1], h);
        return weighted_sum(t, h, wseed);
      };
    }
    out.push_back({op, gradient_rel_error(f, std::move(in))});
  }
  return out;
}

}  // namespace csynth::testing

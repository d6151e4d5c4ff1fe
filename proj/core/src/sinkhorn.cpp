#include "csynth/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "csynth/errors.hpp"

namespace csynth::loss {

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("sinkhorn: epsilon must be > 0");
  if (iterations < 1) throw ConfigError("sinkhorn: iterations must be >= 1");
  if (!(tolerance >= 0.0)) throw ConfigError("sinkhorn: tolerance must be >= 0");
  if (!(causal_weight >= 0.0)) throw ConfigError("sinkhorn: causal weight must be >= 0");
}

SinkhornResult sinkhorn(const Tensor& cost, const SinkhornConfig& cfg) {
  cfg.validate();
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  const double eps = cfg.epsilon;
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  SinkhornResult res;
  res.f.assign(n, 0.0);
  res.g.assign(m, 0.0);
  std::vector<double> buf(std::max(n, m));

  auto lse = [&buf](std::size_t len) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) mx = std::max(mx, buf[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += std::exp(buf[i] - mx);
    return mx + std::log(s);
  };

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) buf[j] = log_b + (res.g[j] - cost(i, j)) / eps;
      res.f[i] = -eps * lse(m);
    }
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = log_a + (res.f[i] - cost(i, j)) / eps;
      res.g[j] = -eps * lse(n);
    }
    // Columns are exact after the g update; measure the row marginals.
    double viol = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        r += std::exp(log_a + log_b + (res.f[i] + res.g[j] - cost(i, j)) / eps);
      }
      viol += std::abs(r - std::exp(log_a));
    }
    res.violation.push_back(viol);
    res.iterations = it + 1;
    if (viol <= cfg.tolerance) break;
  }
  res.converged = res.violation.back() <= kMarginalWarningLevel;

  res.plan = Tensor::matrix(n, m);
  double fa = 0.0;
  double gb = 0.0;
  for (std::size_t i = 0; i < n; ++i) fa += res.f[i];
  for (std::size_t j = 0; j < m; ++j) gb += res.g[j];
  res.value = fa / static_cast<double>(n) + gb / static_cast<double>(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double p = std::exp(log_a + log_b + (res.f[i] + res.g[j] - cost(i, j)) / eps);
      res.plan(i, j) = p;
      res.transport_cost += p * cost(i, j);
    }
  }
  if (!std::isfinite(res.value)) throw NumericError("numeric overflow: sinkhorn value is not finite");
  return res;
}

Tensor squared_distance(const Tensor& x, const Tensor& y) {
  if (x.cols() != y.cols()) {
    throw ShapeError("squared_distance: feature sizes differ " + shape_string(x.shape()) + " vs " +
                     shape_string(y.shape()));
  }
  Tensor out = Tensor::matrix(x.rows(), y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < y.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) {
        const double diff = x(i, k) - y(j, k);
        s += diff * diff;
      }
      out(i, j) = s;
    }
  }
  return out;
}

ad::Var squared_distance(ad::Tape& tape, ad::Var x, ad::Var y) {
  if (x.cols() != y.cols()) {
    throw ShapeError("squared_distance: feature sizes differ " + shape_string(x.value().shape()) +
                     " vs " + shape_string(y.value().shape()));
  }
  const ad::Var xx = tape.sum_cols(tape.mul(x, x));
  const ad::Var yy = tape.transpose(tape.sum_cols(tape.mul(y, y)));
  const ad::Var cross = tape.matmul(x, tape.transpose(y));
  return tape.sub(tape.add(xx, yy), tape.scale(cross, 2.0));
}

ad::Var entropic_ot(ad::Tape& tape, ad::Var cost, const SinkhornConfig& cfg,
                    SinkhornResult* result) {
  SinkhornResult res = sinkhorn(cost.value(), cfg);
  double linear = 0.0;
  const Tensor& c = cost.value();
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) linear += res.plan(i, j) * c(i, j);
  }
  const ad::Var plan = tape.constant(res.plan);
  const ad::Var out = tape.add_scalar(tape.sum(tape.mul(plan, cost)), res.value - linear);
  if (result != nullptr) *result = std::move(res);
  return out;
}

namespace {

void record(DivergenceInfo& info, const SinkhornResult& r) {
  info.max_violation = std::max(info.max_violation, r.violation.back());
  if (!r.converged) info.warning = true;
}

}  // namespace

ad::Var sinkhorn_divergence(ad::Tape& tape, ad::Var x, ad::Var y, const SinkhornConfig& cfg,
                            DivergenceInfo* info) {
  cfg.validate();
  if (x.cols() != y.cols()) {
    throw ShapeError("sinkhorn_divergence: path sizes differ " + shape_string(x.value().shape()) +
                     " vs " + shape_string(y.value().shape()));
  }
  SinkhornResult rxy;
  SinkhornResult rxx;
  SinkhornResult ryy;
  const ad::Var wxy = entropic_ot(tape, squared_distance(tape, x, y), cfg, &rxy);
  const ad::Var wxx = entropic_ot(tape, squared_distance(tape, x, x), cfg, &rxx);
  const ad::Var wyy = entropic_ot(tape, squared_distance(tape, y, y), cfg, &ryy);
  const ad::Var out = tape.sub(wxy, tape.scale(tape.add(wxx, wyy), 0.5));
  if (info != nullptr) {
    *info = DivergenceInfo{};
    info->value = out.item();
    info->xy = rxy.value;
    info->xx = rxx.value;
    info->yy = ryy.value;
    record(*info, rxy);
    record(*info, rxx);
    record(*info, ryy);
  }
  return out;
}

double sinkhorn_divergence(const Tensor& x, const Tensor& y, const SinkhornConfig& cfg,
                           DivergenceInfo* info) {
  ad::Tape tape;
  return sinkhorn_divergence(tape, tape.constant(x), tape.constant(y), cfg, info).item();
}

}  // namespace csynth::loss

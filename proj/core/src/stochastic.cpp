#include "csynth/stochastic.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "csynth/errors.hpp"
#include "csynth/rng.hpp"

namespace csynth::stoch {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Eigen::MatrixXd to_eigen(const Matrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m[i][j];
  }
  return out;
}

Matrix from_eigen(const Eigen::MatrixXd& m) {
  Matrix out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

bool try_cholesky(const Matrix& a, double jitter, Matrix& l) {
  const std::size_t n = a.size();
  l.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a[j][j] + jitter;
    for (std::size_t k = 0; k < j; ++k) diag -= l[j][k] * l[j][k];
    if (!(diag > 0.0)) return false;
    l[j][j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a[i][j];
      for (std::size_t k = 0; k < j; ++k) v -= l[i][k] * l[j][k];
      l[i][j] = v / l[j][j];
    }
  }
  return true;
}

void check_square(const Matrix& m, std::size_t n, const char* what) {
  if (m.size() != n) throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " rows");
  for (const auto& row : m) {
    if (row.size() != n) throw ConfigError(std::string(what) + ": matrix is not square");
  }
}

}  // namespace

void GbmParams::validate() const {
  const std::size_t d = sigma.size();
  if (d == 0) throw ConfigError("gbm: no dimensions");
  if (drift.size() != d) throw ConfigError("gbm: drift size does not match sigma");
  if (!(dt > 0.0)) throw ConfigError("gbm: dt must be positive");
  for (double s : sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("gbm: sigma must be finite and >= 0");
  }
  check_square(corr, d, "gbm corr");
  for (std::size_t i = 0; i < d; ++i) {
    if (std::abs(corr[i][i] - 1.0) > 1e-12) throw ConfigError("gbm: corr diagonal must be 1");
    for (std::size_t j = 0; j < d; ++j) {
      if (std::abs(corr[i][j] - corr[j][i]) > 1e-12) throw ConfigError("gbm: corr not symmetric");
      if (std::abs(corr[i][j]) > 1.0 + 1e-12) throw ConfigError("gbm: corr entry outside [-1, 1]");
    }
  }
}

nlohmann::ordered_json GbmParams::to_json() const {
  nlohmann::ordered_json j;
  j["sigma"] = sigma;
  j["drift"] = drift;
  j["corr"] = corr;
  j["dt"] = dt;
  return j;
}

GbmParams GbmParams::from_json(const nlohmann::json& j) {
  GbmParams p;
  try {
    p.sigma = j.at("sigma").get<std::vector<double>>();
    p.drift = j.contains("drift") ? j.at("drift").get<std::vector<double>>()
                                  : std::vector<double>(p.sigma.size(), 0.0);
    p.corr = j.at("corr").get<Matrix>();
    p.dt = j.value("dt", data::kDailyDt);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("gbm params: ") + e.what());
  }
  p.validate();
  return p;
}

GbmParams calibrate_gbm(const data::PathBatch& batch) {
  batch.validate();
  if (batch.steps() < 3) throw DataError("calibrate_gbm: need at least 3 time steps");
  const std::size_t d = batch.dims();
  const std::size_t n_ret = batch.samples() * (batch.steps() - 1);
  std::vector<std::vector<double>> ret(d, std::vector<double>(n_ret));
  for (std::size_t s = 0, idx = 0; s < batch.samples(); ++s) {
    for (std::size_t t = 0; t + 1 < batch.steps(); ++t, ++idx) {
      for (std::size_t k = 0; k < d; ++k) {
        const double a = batch(s, t, k);
        const double b = batch(s, t + 1, k);
        if (!(a > 0.0) || !(b > 0.0)) throw DataError("calibrate_gbm: non-positive price");
        ret[k][idx] = std::log(b / a);
      }
    }
  }
  GbmParams p;
  p.dt = batch.dt();
  p.sigma.resize(d);
  p.drift.assign(d, 0.0);
  p.corr.assign(d, std::vector<double>(d, 0.0));
  std::vector<double> mean(d, 0.0);
  std::vector<double> sd(d, 0.0);
  const auto n = static_cast<double>(n_ret);
  for (std::size_t k = 0; k < d; ++k) {
    double sq = 0.0;
    double m = 0.0;
    for (double r : ret[k]) {
      sq += r * r;
      m += r;
    }
    p.sigma[k] = std::sqrt(sq / n / p.dt);
    mean[k] = m / n;
    double var = 0.0;
    for (double r : ret[k]) var += (r - mean[k]) * (r - mean[k]);
    sd[k] = std::sqrt(var / n);
  }
  for (std::size_t i = 0; i < d; ++i) {
    p.corr[i][i] = 1.0;
    for (std::size_t j = i + 1; j < d; ++j) {
      double c = 0.0;
      if (sd[i] > 0.0 && sd[j] > 0.0) {
        double cov = 0.0;
        for (std::size_t r = 0; r < n_ret; ++r) cov += (ret[i][r] - mean[i]) * (ret[j][r] - mean[j]);
        c = std::clamp(cov / n / (sd[i] * sd[j]), -1.0, 1.0);
      }
      p.corr[i][j] = p.corr[j][i] = c;
    }
  }
  return p;
}

Matrix cholesky(const Matrix& corr) {
  check_square(corr, corr.size(), "cholesky");
  Matrix l;
  if (try_cholesky(corr, 0.0, l)) return l;
  if (try_cholesky(corr, 1e-10, l)) return l;
  throw DataError("correlation matrix is not positive semi-definite (Cholesky failed after jitter 1e-10)");
}

data::PathBatch simulate_gbm(const GbmParams& params, std::size_t n_paths, std::size_t steps,
                             std::span<const double> s0, std::uint64_t seed,
                             std::vector<std::string> labels) {
  params.validate();
  const std::size_t d = params.dims();
  if (s0.size() != d) throw ShapeError("simulate_gbm: s0 size does not match dimensions");
  if (steps < 2) throw DataError("simulate_gbm: need at least 2 time steps");
  for (double v : s0) {
    if (!(v > 0.0)) throw DataError("simulate_gbm: s0 must be positive");
  }
  const Matrix l = cholesky(params.corr);
  data::PathBatch out(n_paths, steps, d, std::move(labels), params.dt);
  const double sqdt = std::sqrt(params.dt);
  std::vector<double> z(d);
  std::vector<double> drift(d);
  for (std::size_t k = 0; k < d; ++k) {
    drift[k] = (params.drift[k] - 0.5 * params.sigma[k] * params.sigma[k]) * params.dt;
  }
  for (std::size_t s = 0; s < n_paths; ++s) {
    Rng rng(seed, s);
    for (std::size_t k = 0; k < d; ++k) out(s, 0, k) = s0[k];
    for (std::size_t t = 0; t + 1 < steps; ++t) {
      for (std::size_t k = 0; k < d; ++k) z[k] = rng.normal();
      for (std::size_t k = 0; k < d; ++k) {
        double w = 0.0;
        for (std::size_t j = 0; j <= k; ++j) w += l[k][j] * z[j];
        out(s, t + 1, k) = out(s, t, k) * std::exp(drift[k] + params.sigma[k] * sqdt * w);
      }
    }
  }
  return out;
}

double min_eigenvalue(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(symmetric), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix nearest_correlation(const Matrix& corr, double min_eig, int iterations) {
  check_square(corr, corr.size(), "nearest_correlation");
  const Eigen::MatrixXd a = to_eigen(corr);
  const Eigen::Index n = a.rows();
  auto psd_projection = [n, min_eig](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd w = es.eigenvalues().cwiseMax(min_eig);
    (void)n;
    return Eigen::MatrixXd(es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose());
  };
  // Higham's alternating projections with Dykstra's correction.
  Eigen::MatrixXd y = a;
  Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(n, n);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd r = y - ds;
    const Eigen::MatrixXd x = psd_projection(r);
    ds = x - r;
    y = x;
    y.diagonal().setOnes();
  }
  // Final PSD step, then rescale to a unit diagonal (keeps eigenvalues positive).
  Eigen::MatrixXd x = psd_projection(y);
  const Eigen::VectorXd inv = x.diagonal().cwiseSqrt().cwiseInverse();
  x = inv.asDiagonal() * x * inv.asDiagonal();
  x = 0.5 * (x + x.transpose());
  x.diagonal().setOnes();
  return from_eigen(x);
}

double bs_price(double spot, double strike, double vol, double maturity) {
  if (spot < 0.0 || strike < 0.0 || vol < 0.0 || maturity < 0.0) {
    throw std::domain_error("bs_price: negative input");
  }
  if (strike == 0.0) return spot;
  const double sd = vol * std::sqrt(maturity);
  if (sd == 0.0 || spot == 0.0) return std::max(spot - strike, 0.0);
  const double d1 = (std::log(spot / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  return spot * norm_cdf(d1) - strike * norm_cdf(d2);
}

double bs_delta(double spot, double strike, double vol, double time_to_maturity) {
  if (spot < 0.0 || strike < 0.0 || vol < 0.0 || time_to_maturity < 0.0) {
    throw std::domain_error("bs_delta: negative input");
  }
  if (strike == 0.0) return 1.0;
  const double sd = vol * std::sqrt(time_to_maturity);
  if (sd == 0.0 || spot == 0.0) {
    if (spot > strike) return 1.0;
    if (spot < strike) return 0.0;
    return 0.5;
  }
  const double d1 = (std::log(spot / strike) + 0.5 * sd * sd) / sd;
  return norm_cdf(d1);
}

BsQuote bs_quote(double spot, double strike, double vol, double maturity) {
  return BsQuote{spot, strike, vol, maturity, bs_price(spot, strike, vol, maturity),
                 bs_delta(spot, strike, vol, maturity)};
}

}  // namespace csynth::stoch

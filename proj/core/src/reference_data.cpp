#include "csynth/reference_data.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "csynth/errors.hpp"
#include "csynth/rng.hpp"

namespace csynth::stoch {

namespace {

double round4(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 4);
  double out = 0.0;
  std::from_chars(buf, res.ptr, out);
  return out;
}

ReferenceMarket make_market() {
  ReferenceMarket m;
  m.names = {"elec", "gas", "oil", "coal"};
  m.s0 = {41.41, 10.34, 370.49, 52.76};
  m.sigma = {0.44, 0.50, 0.38, 0.25};
  m.published_corr = {{1.00, 0.78, 0.62, 0.00},
                      {0.78, 1.00, 0.25, 0.82},
                      {0.62, 0.25, 1.00, 0.31},
                      {0.00, 0.82, 0.31, 1.00}};
  m.corr = nearest_correlation(m.published_corr, 1e-4);
  return m;
}

}  // namespace

GbmParams ReferenceMarket::gbm() const {
  GbmParams p;
  p.sigma = sigma;
  p.drift.assign(sigma.size(), 0.0);
  p.corr = corr;
  p.dt = data::kDailyDt;
  return p;
}

const ReferenceMarket& reference_market() {
  static const ReferenceMarket market = make_market();
  return market;
}

data::PriceTable reference_price_table(std::size_t days, std::uint64_t seed) {
  const ReferenceMarket& m = reference_market();
  const data::PathBatch path = simulate_gbm(m.gbm(), 1, days, m.s0, seed, m.names);
  data::PriceTable table;
  table.dates = data::business_days(data::Date{2020, 1, 21}, days);
  table.names = m.names;
  table.columns.assign(m.names.size(), std::vector<double>(days));
  for (std::size_t k = 0; k < m.names.size(); ++k) {
    for (std::size_t t = 0; t < days; ++t) table.columns[k][t] = round4(path(0, t, k));
  }
  table.validate();
  return table;
}

void MeanRevertingParams::validate() const {
  const std::size_t d = sigma.size();
  if (d == 0) throw ConfigError("mean-reverting: no dimensions");
  if (kappa.size() != d || level.size() != d) {
    throw ConfigError("mean-reverting: kappa/level size does not match sigma");
  }
  for (std::size_t k = 0; k < d; ++k) {
    if (!(kappa[k] >= 0.0) || !(level[k] > 0.0) || !(sigma[k] >= 0.0)) {
      throw ConfigError("mean-reverting: need kappa >= 0, level > 0, sigma >= 0");
    }
  }
  if (!(dt > 0.0)) throw ConfigError("mean-reverting: dt must be positive");
  GbmParams probe{sigma, std::vector<double>(d, 0.0), corr, dt};
  probe.validate();
}

data::PathBatch simulate_mean_reverting(const MeanRevertingParams& params, std::size_t n_paths,
                                        std::size_t steps, std::span<const double> s0,
                                        std::uint64_t seed) {
  params.validate();
  const std::size_t d = params.dims();
  if (s0.size() != d) throw ShapeError("simulate_mean_reverting: s0 size does not match dimensions");
  if (steps < 2) throw DataError("simulate_mean_reverting: need at least 2 time steps");
  const Matrix l = cholesky(params.corr);
  std::vector<double> decay(d);
  std::vector<double> stdev(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double a = params.kappa[k];
    decay[k] = std::exp(-a * params.dt);
    stdev[k] = a > 0.0 ? params.sigma[k] * std::sqrt((1.0 - decay[k] * decay[k]) / (2.0 * a))
                       : params.sigma[k] * std::sqrt(params.dt);
  }
  data::PathBatch out(n_paths, steps, d, {}, params.dt);
  std::vector<double> z(d);
  std::vector<double> x(d);
  for (std::size_t s = 0; s < n_paths; ++s) {
    Rng rng(seed, s);
    for (std::size_t k = 0; k < d; ++k) {
      if (!(s0[k] > 0.0)) throw DataError("simulate_mean_reverting: s0 must be positive");
      x[k] = std::log(s0[k]);
      out(s, 0, k) = s0[k];
    }
    for (std::size_t t = 1; t < steps; ++t) {
      for (std::size_t k = 0; k < d; ++k) z[k] = rng.normal();
      for (std::size_t k = 0; k < d; ++k) {
        double w = 0.0;
        for (std::size_t j = 0; j <= k; ++j) w += l[k][j] * z[j];
        const double m = std::log(params.level[k]);
        x[k] = m + (x[k] - m) * decay[k] + stdev[k] * w;
        out(s, t, k) = std::exp(x[k]);
      }
    }
  }
  return out;
}

}  // namespace csynth::stoch

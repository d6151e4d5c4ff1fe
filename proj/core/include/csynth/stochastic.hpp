#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csynth/dataio.hpp"

namespace csynth::stoch {

using Matrix = std::vector<std::vector<double>>;

/// Correlated geometric Brownian motion, annualised.
struct GbmParams {
  std::vector<double> sigma;
  std::vector<double> drift;
  Matrix corr;
  double dt = data::kDailyDt;

  [[nodiscard]] std::size_t dims() const noexcept { return sigma.size(); }
  /// Throws ConfigError on negative vols, size mismatch, or a non-symmetric / non-unit-diagonal corr.
  void validate() const;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
  static GbmParams from_json(const nlohmann::json& j);

  friend bool operator==(const GbmParams&, const GbmParams&) = default;
};

/// Zero-drift maximum likelihood fit on log-returns:
/// sigma_i = sqrt(mean(r_i^2) / dt), corr = sample correlation of log-returns.
/// Dimensions with zero variance get zero off-diagonal correlation.
[[nodiscard]] GbmParams calibrate_gbm(const data::PathBatch& batch);

/// Lower Cholesky factor. Retries once with 1e-10 added to the diagonal before failing.
[[nodiscard]] Matrix cholesky(const Matrix& corr);

/// Exact log-Euler stepping S_{t+1} = S_t exp((mu - sigma^2/2) dt + sigma sqrt(dt) (L z)).
/// Path s draws from its own counter-based stream, so results do not depend on batching.
[[nodiscard]] data::PathBatch simulate_gbm(const GbmParams& params, std::size_t n_paths,
                                           std::size_t steps, std::span<const double> s0,
                                           std::uint64_t seed,
                                           std::vector<std::string> labels = {});

/// Nearest correlation matrix (alternating projections), with eigenvalues floored
/// at `min_eigenvalue` so the result admits a Cholesky factor.
[[nodiscard]] Matrix nearest_correlation(const Matrix& corr, double min_eigenvalue = 1e-6,
                                         int iterations = 500);
[[nodiscard]] double min_eigenvalue(const Matrix& symmetric);

struct BsQuote {
  double spot = 0.0;
  double strike = 0.0;
  double vol = 0.0;
  double maturity = 0.0;
  double price = 0.0;
  double delta = 0.0;
};

/// Zero-rate Black-Scholes call price.
[[nodiscard]] double bs_price(double spot, double strike, double vol, double maturity);
/// Zero-rate call delta. At expiry (or zero vol): 1 above the strike, 0 below, 0.5 at the money.
[[nodiscard]] double bs_delta(double spot, double strike, double vol, double time_to_maturity);
[[nodiscard]] BsQuote bs_quote(double spot, double strike, double vol, double maturity);

}  // namespace csynth::stoch

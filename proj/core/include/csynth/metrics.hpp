#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "csynth/dataio.hpp"

namespace csynth::metrics {

/// Discrete quadratic variation sum_t |x_{t+1} - x_t|^2.
[[nodiscard]] double qvar(std::span<const double> series);

struct MarginalMetrics {
  std::vector<double> p05;
  std::vector<double> avg;
  std::vector<double> p95;
};

/// Per dimension: mean over t of the squared difference of the per-step statistic.
[[nodiscard]] MarginalMetrics marginal_metrics(const data::PathBatch& real, const data::PathBatch& fake);
/// Batch-mean quadratic variation per dimension.
[[nodiscard]] std::vector<double> mean_qvar(const data::PathBatch& batch);
/// Per dimension: squared difference of batch-mean QVars.
[[nodiscard]] std::vector<double> qvar_metric(const data::PathBatch& real, const data::PathBatch& fake);
/// Cross-sectional covariance matrix (population) at step t, d x d row-major.
[[nodiscard]] std::vector<double> covariance_at(const data::PathBatch& batch, std::size_t t);
/// Mean over t and matrix entries of squared covariance differences; 0 when d == 1.
[[nodiscard]] double corr_metric(const data::PathBatch& real, const data::PathBatch& fake);
/// Same aggregation on Pearson correlation matrices.
[[nodiscard]] double pearson_corr_metric(const data::PathBatch& real, const data::PathBatch& fake);

inline constexpr std::size_t kLowConfidenceSamples = 20;

struct DimMetrics {
  std::string dim;
  double p05 = 0.0;
  double avg = 0.0;
  double p95 = 0.0;
  double qvar = 0.0;

  friend bool operator==(const DimMetrics&, const DimMetrics&) = default;
};

struct MetricReport {
  std::string model;
  std::vector<DimMetrics> dims;
  double corr = 0.0;
  double corr_pearson = 0.0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
  std::size_t steps = 0;
  std::size_t d = 0;
  /// Fewer than 20 samples on either side; percentiles are unreliable.
  bool low_confidence = false;
  std::string real_id;
  std::string fake_id;
  std::string note;

  [[nodiscard]] nlohmann::ordered_json summary_json() const;
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

[[nodiscard]] MetricReport metric_report(const data::PathBatch& real, const data::PathBatch& fake,
                                         std::string model, std::string real_id = "real",
                                         std::string fake_id = "fake");

/// Divide every dimension of both batches by the real batch's mean initial value.
void unit_scale(data::PathBatch& real, data::PathBatch& fake);

inline constexpr std::string_view kReportHeader = "model,dim,p05,avg,p95,qvar,corr";

/// One row per (report, dim); values in %.2e; the scalar corr repeats on every row.
[[nodiscard]] std::string format_report_csv(std::span<const MetricReport> reports);
void write_report_csv(std::span<const MetricReport> reports, const std::filesystem::path& path);
/// Inverse of format_report_csv (counts and ids are not stored in the CSV).
[[nodiscard]] std::vector<MetricReport> parse_report_csv(std::string_view text,
                                                         std::string_view source = "<memory>");

/// Value as printed in the report ("%.2e").
[[nodiscard]] std::string format_value(double v);

}  // namespace csynth::metrics

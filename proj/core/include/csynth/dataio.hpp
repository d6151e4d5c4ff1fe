#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "csynth/tensor.hpp"

namespace csynth::data {

inline constexpr double kTradingDaysPerYear = 252.0;
inline constexpr double kDailyDt = 1.0 / kTradingDaysPerYear;

/// Calendar date (proleptic Gregorian), ISO-8601 text form YYYY-MM-DD.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  static Date parse(std::string_view text);
  [[nodiscard]] std::string iso() const;
  [[nodiscard]] bool is_weekend() const;
  [[nodiscard]] Date next_day() const;

  friend auto operator<=>(const Date&, const Date&) = default;
};

/// `count` consecutive Monday-Friday dates starting at (or after) `start`.
[[nodiscard]] std::vector<Date> business_days(Date start, std::size_t count);

/// Daily price history: one date column plus one strictly positive column per commodity.
struct PriceTable {
  std::vector<Date> dates;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  [[nodiscard]] std::size_t rows() const noexcept { return dates.size(); }
  [[nodiscard]] std::size_t dims() const noexcept { return names.size(); }
  [[nodiscard]] const std::vector<double>& column(std::string_view name) const;
  [[nodiscard]] std::size_t column_index(std::string_view name) const;
  /// Throws DataError unless dates strictly increase, columns share one length and prices are > 0.
  void validate() const;

  friend bool operator==(const PriceTable&, const PriceTable&) = default;
};

/// Read `date,<name1>,...` CSV. With a non-empty schema, those columns are
/// required and returned in schema order; otherwise every column is kept.
/// Rows are returned sorted by date.
[[nodiscard]] PriceTable load_csv(const std::filesystem::path& path,
                                  std::span<const std::string> schema = {});
[[nodiscard]] PriceTable parse_csv(std::string_view text, std::span<const std::string> schema = {},
                                   std::string_view source = "<memory>");
void write_csv(const PriceTable& table, const std::filesystem::path& path);
[[nodiscard]] std::string format_csv(const PriceTable& table);

/// 3-axis block of values: samples x steps x dims, row-major in that order.
class PathBatch {
 public:
  PathBatch() = default;
  PathBatch(std::size_t samples, std::size_t steps, std::size_t dims,
            std::vector<std::string> labels = {}, double dt = kDailyDt);

  double& operator()(std::size_t s, std::size_t t, std::size_t k) {
    return values_[(s * steps_ + t) * dims_ + k];
  }
  double operator()(std::size_t s, std::size_t t, std::size_t k) const {
    return values_[(s * steps_ + t) * dims_ + k];
  }

  [[nodiscard]] std::size_t samples() const noexcept { return samples_; }
  [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
  [[nodiscard]] std::size_t dims() const noexcept { return dims_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  void set_dt(double dt);
  [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
  void set_labels(std::vector<std::string> labels);

  [[nodiscard]] std::span<const double> data() const noexcept { return values_; }
  [[nodiscard]] std::span<double> data() noexcept { return values_; }

  /// samples x dims matrix of the values at one time step.
  [[nodiscard]] Tensor time_slice(std::size_t t) const;
  /// steps x dims matrix for one sample.
  [[nodiscard]] Tensor path(std::size_t s) const;
  [[nodiscard]] std::vector<double> series(std::size_t s, std::size_t k) const;
  [[nodiscard]] PathBatch select(std::span<const std::size_t> samples) const;
  /// Keep only the given dimensions, in the given order.
  [[nodiscard]] PathBatch select_dims(std::span<const std::size_t> dims) const;
  void set_time_slice(std::size_t t, const Tensor& values);

  /// Throws DataError unless steps >= 2, dims >= 1 and every value is finite.
  void validate() const;
  [[nodiscard]] bool empty() const noexcept { return samples_ == 0; }

  friend bool operator==(const PathBatch&, const PathBatch&) = default;

 private:
  std::size_t samples_ = 0;
  std::size_t steps_ = 0;
  std::size_t dims_ = 0;
  std::vector<std::string> labels_;
  double dt_ = kDailyDt;
  std::vector<double> values_;
};

/// Sample quantile with linear interpolation between order statistics (R type 7).
[[nodiscard]] double quantile(std::vector<double> values, double level);
/// Same, on data already sorted ascending.
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double level);

/// Jump filter with the threshold taken as the `quantile_level` quantile of |first differences|.
[[nodiscard]] std::vector<double> jump_filter(std::span<const double> series,
                                              double quantile_level = 0.95);
/// Jump filter with an explicit threshold q >= 0. Differences above q in magnitude are
/// clipped to +-q and the excess is carried into the next difference; the final
/// difference absorbs any remaining carry, so the endpoint is preserved.
[[nodiscard]] std::vector<double> jump_filter_with_threshold(std::span<const double> series,
                                                             double threshold);
/// Apply jump_filter to every column.
[[nodiscard]] PriceTable jump_filter(const PriceTable& table, double quantile_level = 0.95);

/// Overlapping windows of `length` rows taken every `stride` rows.
[[nodiscard]] PathBatch windowize(const PriceTable& table, std::size_t length = 30,
                                  std::size_t stride = 1);

enum class NormalizationMode { kMinMax, kInitialValueRatio };

[[nodiscard]] std::string_view to_string(NormalizationMode mode) noexcept;
[[nodiscard]] NormalizationMode parse_normalization(std::string_view text);

/// Per-dimension affine statistics.
///
/// Min-max: x -> (x - shift) / scale with shift = min and scale = max - min.
/// Initial-value ratio: every path is divided by its own first value; `scale`
/// holds the mean initial level (used when no anchors are given to invert()).
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(NormalizationMode mode, std::vector<double> shift, std::vector<double> scale);

  static Normalizer fit(const PathBatch& batch, NormalizationMode mode);

  [[nodiscard]] PathBatch apply(const PathBatch& batch) const;
  [[nodiscard]] PathBatch invert(const PathBatch& batch) const;
  /// Ratio mode: multiply each path by its anchor row (samples x dims). Min-max ignores anchors.
  [[nodiscard]] PathBatch invert(const PathBatch& batch, const Tensor& anchors) const;

  [[nodiscard]] NormalizationMode mode() const noexcept { return mode_; }
  [[nodiscard]] const std::vector<double>& shift() const noexcept { return shift_; }
  [[nodiscard]] const std::vector<double>& scale() const noexcept { return scale_; }
  [[nodiscard]] std::size_t dims() const noexcept { return scale_.size(); }

  friend bool operator==(const Normalizer&, const Normalizer&) = default;

 private:
  NormalizationMode mode_ = NormalizationMode::kInitialValueRatio;
  std::vector<double> shift_;
  std::vector<double> scale_;
};

/// samples x dims matrix of first values.
[[nodiscard]] Tensor initial_values(const PathBatch& batch);
/// Scale each path multiplicatively so its first slice equals `s0` exactly.
[[nodiscard]] PathBatch rebase(const PathBatch& batch, std::span<const double> s0);
/// Per-path starting values (samples x dims).
[[nodiscard]] PathBatch rebase(const PathBatch& batch, const Tensor& starts);

}  // namespace csynth::data

#include "csynth/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "csynth/errors.hpp"

namespace csynth::data {

namespace {

std::chrono::year_month_day to_ymd(const Date& d) {
  return std::chrono::year_month_day{std::chrono::year{d.year},
                                     std::chrono::month{static_cast<unsigned>(d.month)},
                                     std::chrono::day{static_cast<unsigned>(d.day)}};
}

Date from_ymd(const std::chrono::year_month_day& ymd) {
  return Date{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
              static_cast<int>(static_cast<unsigned>(ymd.day()))};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

}  // namespace

// ---------------------------------------------------------------------------
// Date

Date Date::parse(std::string_view text) {
  text = trim(text);
  Date d;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), d.year) ||
      !parse_int(text.substr(5, 2), d.month) || !parse_int(text.substr(8, 2), d.day) ||
      !to_ymd(d).ok()) {
    throw DataError("invalid ISO-8601 date '" + std::string(text) + "'");
  }
  return d;
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

bool Date::is_weekend() const {
  const std::chrono::weekday wd{std::chrono::sys_days{to_ymd(*this)}};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

Date Date::next_day() const {
  return from_ymd(std::chrono::year_month_day{std::chrono::sys_days{to_ymd(*this)} +
                                              std::chrono::days{1}});
}

std::vector<Date> business_days(Date start, std::size_t count) {
  std::vector<Date> out;
  out.reserve(count);
  Date d = start;
  while (out.size() < count) {
    if (!d.is_weekend()) out.push_back(d);
    d = d.next_day();
  }
  return out;
}

// ---------------------------------------------------------------------------
// PriceTable

std::size_t PriceTable::column_index(std::string_view name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DataError("price table: no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

const std::vector<double>& PriceTable::column(std::string_view name) const {
  return columns[column_index(name)];
}

void PriceTable::validate() const {
  if (names.size() != columns.size()) throw DataError("price table: names/columns size mismatch");
  if (names.empty()) throw DataError("price table: no commodity columns");
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw DataError("price table: dates not strictly increasing at " + dates[i].iso());
    }
  }
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k].size() != dates.size()) {
      throw DataError("price table: column '" + names[k] + "' has " +
                      std::to_string(columns[k].size()) + " values for " +
                      std::to_string(dates.size()) + " dates");
    }
    for (std::size_t i = 0; i < columns[k].size(); ++i) {
      if (!(columns[k][i] > 0.0) || !std::isfinite(columns[k][i])) {
        throw DataError("price table: non-positive price in column '" + names[k] + "' on " +
                        dates[i].iso());
      }
    }
  }
}

PriceTable parse_csv(std::string_view text, std::span<const std::string> schema,
                     std::string_view source) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto pos = text.find('\n', start);
      auto line = text.substr(start, pos == text.npos ? text.npos : pos - start);
      lines.push_back(line);
      if (pos == text.npos) break;
      start = pos + 1;
    }
  }
  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw DataError(std::string(source) + ": missing header row");

  const auto header = split(lines[header_line]);
  if (header.empty() || header[0] != "date") {
    throw DataError(where(source, header_line + 1) + "first header column must be 'date'");
  }
  std::vector<std::string> file_names;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw DataError(where(source, header_line + 1) + "empty column name");
    if (std::find(file_names.begin(), file_names.end(), header[c]) != file_names.end()) {
      throw DataError(where(source, header_line + 1) + "duplicate column '" + std::string(header[c]) + "'");
    }
    file_names.emplace_back(header[c]);
  }

  std::vector<std::size_t> selected;
  std::vector<std::string> names;
  if (schema.empty()) {
    selected.resize(file_names.size());
    std::iota(selected.begin(), selected.end(), std::size_t{0});
    names = file_names;
  } else {
    for (const auto& want : schema) {
      auto it = std::find(file_names.begin(), file_names.end(), want);
      if (it == file_names.end()) {
        throw DataError(std::string(source) + ": missing column '" + want + "'");
      }
      selected.push_back(static_cast<std::size_t>(it - file_names.begin()));
      names.push_back(want);
    }
  }
  if (names.empty()) throw DataError(std::string(source) + ": no commodity columns");

  struct Row {
    Date date;
    std::vector<double> values;
    std::size_t line;
  };
  std::vector<Row> rows;
  for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split(lines[li]);
    if (cells.size() != header.size()) {
      throw DataError(where(source, li + 1) + "expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size()));
    }
    Row row;
    row.line = li + 1;
    try {
      row.date = Date::parse(cells[0]);
    } catch (const DataError& e) {
      throw DataError(where(source, li + 1) + e.what());
    }
    for (std::size_t k = 0; k < selected.size(); ++k) {
      const auto cell = cells[selected[k] + 1];
      if (cell.empty()) {
        throw DataError(where(source, li + 1) + "missing value in column '" + names[k] + "'");
      }
      double v = 0.0;
      if (!parse_double(cell, v)) {
        throw DataError(where(source, li + 1) + "unparsable number '" + std::string(cell) +
                        "' in column '" + names[k] + "'");
      }
      if (!(v > 0.0)) {
        throw DataError(where(source, li + 1) + "non-positive price " + std::string(cell) +
                        " in column '" + names[k] + "'");
      }
      row.values.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].date == rows[i - 1].date) {
      throw DataError(where(source, rows[i].line) + "duplicate date " + rows[i].date.iso());
    }
  }

  PriceTable table;
  table.names = std::move(names);
  table.columns.assign(table.names.size(), {});
  for (auto& row : rows) {
    table.dates.push_back(row.date);
    for (std::size_t k = 0; k < row.values.size(); ++k) table.columns[k].push_back(row.values[k]);
  }
  return table;
}

PriceTable load_csv(const std::filesystem::path& path, std::span<const std::string> schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, path.string());
}

std::string format_csv(const PriceTable& table) {
  table.validate();
  std::string out = "date";
  for (const auto& n : table.names) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < table.rows(); ++i) {
    out += table.dates[i].iso();
    for (const auto& col : table.columns) out += "," + format_double(col[i]);
    out += "\n";
  }
  return out;
}

void write_csv(const PriceTable& table, const std::filesystem::path& path) {
  const std::string text = format_csv(table);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// PathBatch

PathBatch::PathBatch(std::size_t samples, std::size_t steps, std::size_t dims,
                     std::vector<std::string> labels, double dt)
    : samples_(samples), steps_(steps), dims_(dims), labels_(std::move(labels)), dt_(dt),
      values_(samples * steps * dims, 0.0) {
  if (labels_.empty()) {
    for (std::size_t k = 0; k < dims; ++k) labels_.push_back("d" + std::to_string(k));
  }
  if (labels_.size() != dims) {
    throw ShapeError("path batch: " + std::to_string(labels_.size()) + " labels for " +
                     std::to_string(dims) + " dims");
  }
  if (!(dt > 0.0)) throw ShapeError("path batch: dt must be positive");
}

void PathBatch::set_dt(double dt) {
  if (!(dt > 0.0)) throw ShapeError("path batch: dt must be positive");
  dt_ = dt;
}

void PathBatch::set_labels(std::vector<std::string> labels) {
  if (labels.size() != dims_) throw ShapeError("path batch: label count mismatch");
  labels_ = std::move(labels);
}

Tensor PathBatch::time_slice(std::size_t t) const {
  Tensor out = Tensor::matrix(samples_, dims_);
  for (std::size_t s = 0; s < samples_; ++s) {
    for (std::size_t k = 0; k < dims_; ++k) out(s, k) = (*this)(s, t, k);
  }
  return out;
}

void PathBatch::set_time_slice(std::size_t t, const Tensor& values) {
  if (values.rows() != samples_ || values.cols() != dims_) {
    throw ShapeError("path batch: time slice shape " + shape_string(values.shape()) + " for batch " +
                     std::to_string(samples_) + "x" + std::to_string(dims_));
  }
  for (std::size_t s = 0; s < samples_; ++s) {
    for (std::size_t k = 0; k < dims_; ++k) (*this)(s, t, k) = values(s, k);
  }
}

Tensor PathBatch::path(std::size_t s) const {
  Tensor out = Tensor::matrix(steps_, dims_);
  for (std::size_t t = 0; t < steps_; ++t) {
    for (std::size_t k = 0; k < dims_; ++k) out(t, k) = (*this)(s, t, k);
  }
  return out;
}

std::vector<double> PathBatch::series(std::size_t s, std::size_t k) const {
  std::vector<double> out(steps_);
  for (std::size_t t = 0; t < steps_; ++t) out[t] = (*this)(s, t, k);
  return out;
}

PathBatch PathBatch::select(std::span<const std::size_t> samples) const {
  PathBatch out(samples.size(), steps_, dims_, labels_, dt_);
  const std::size_t stride = steps_ * dims_;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i] >= samples_) throw ShapeError("path batch: sample index out of range");
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(samples[i] * stride), stride,
                out.values_.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

PathBatch PathBatch::select_dims(std::span<const std::size_t> dims) const {
  std::vector<std::string> labels;
  for (auto k : dims) {
    if (k >= dims_) throw ShapeError("path batch: dimension index out of range");
    labels.push_back(labels_[k]);
  }
  PathBatch out(samples_, steps_, dims.size(), std::move(labels), dt_);
  for (std::size_t s = 0; s < samples_; ++s) {
    for (std::size_t t = 0; t < steps_; ++t) {
      for (std::size_t j = 0; j < dims.size(); ++j) out(s, t, j) = (*this)(s, t, dims[j]);
    }
  }
  return out;
}

void PathBatch::validate() const {
  if (steps_ < 2) throw DataError("path batch: need at least 2 time steps");
  if (dims_ < 1) throw DataError("path batch: need at least 1 dimension");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DataError("path batch: non-finite value");
  }
}

// ---------------------------------------------------------------------------
// Quantiles and the jump filter

double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw DataError("quantile of an empty sample");
  if (!(level >= 0.0 && level <= 1.0)) throw DataError("quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * level;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, level);
}

std::vector<double> jump_filter_with_threshold(std::span<const double> series, double threshold) {
  if (series.size() < 2) throw DataError("jump filter: series needs at least 2 points");
  if (!(threshold >= 0.0)) throw DataError("jump filter: threshold must be >= 0");
  const std::size_t n = series.size() - 1;
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = series[i + 1] - series[i];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (diff[i] > threshold) {
      const double gap = diff[i] - threshold;
      diff[i] = threshold;
      diff[i + 1] += gap;
    } else if (diff[i] < -threshold) {
      const double gap = -diff[i] - threshold;
      diff[i] = -threshold;
      diff[i + 1] -= gap;
    }
  }
  std::vector<double> out(series.size());
  out[0] = series[0];
  for (std::size_t i = 0; i + 1 < n; ++i) out[i + 1] = out[i] + diff[i];
  out[n] = series[n];
  return out;
}

std::vector<double> jump_filter(std::span<const double> series, double quantile_level) {
  if (series.size() < 2) throw DataError("jump filter: series needs at least 2 points");
  std::vector<double> abs_diff(series.size() - 1);
  bool any_move = false;
  for (std::size_t i = 0; i + 1 < series.size(); ++i) {
    abs_diff[i] = std::abs(series[i + 1] - series[i]);
    any_move = any_move || abs_diff[i] != 0.0;
  }
  if (!any_move) return {series.begin(), series.end()};
  return jump_filter_with_threshold(series, quantile(std::move(abs_diff), quantile_level));
}

PriceTable jump_filter(const PriceTable& table, double quantile_level) {
  PriceTable out = table;
  for (std::size_t k = 0; k < out.columns.size(); ++k) {
    out.columns[k] = jump_filter(table.columns[k], quantile_level);
    for (std::size_t i = 0; i < out.columns[k].size(); ++i) {
      if (!(out.columns[k][i] > 0.0)) {
        throw DataError("jump filter: column '" + out.names[k] + "' became non-positive on " +
                        out.dates[i].iso());
      }
    }
  }
  return out;
}

PathBatch windowize(const PriceTable& table, std::size_t length, std::size_t stride) {
  if (length < 2) throw DataError("windowize: window length must be >= 2");
  if (stride < 1) throw DataError("windowize: stride must be >= 1");
  if (length > table.rows()) {
    throw DataError("windowize: window length " + std::to_string(length) + " exceeds " +
                    std::to_string(table.rows()) + " table rows");
  }
  const std::size_t count = (table.rows() - length) / stride + 1;
  PathBatch batch(count, length, table.dims(), table.names, kDailyDt);
  for (std::size_t s = 0; s < count; ++s) {
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t k = 0; k < table.dims(); ++k) batch(s, t, k) = table.columns[k][s * stride + t];
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Normalisation

std::string_view to_string(NormalizationMode mode) noexcept {
  return mode == NormalizationMode::kMinMax ? "min-max" : "initial-value-ratio";
}

NormalizationMode parse_normalization(std::string_view text) {
  if (text == "min-max") return NormalizationMode::kMinMax;
  if (text == "initial-value-ratio") return NormalizationMode::kInitialValueRatio;
  throw ConfigError("unknown normalization mode '" + std::string(text) + "'");
}

Normalizer::Normalizer(NormalizationMode mode, std::vector<double> shift, std::vector<double> scale)
    : mode_(mode), shift_(std::move(shift)), scale_(std::move(scale)) {
  if (shift_.size() != scale_.size()) throw DataError("normalizer: shift/scale size mismatch");
  for (double s : scale_) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DataError("normalizer: scale must be positive");
  }
}

Normalizer Normalizer::fit(const PathBatch& batch, NormalizationMode mode) {
  batch.validate();
  const std::size_t d = batch.dims();
  std::vector<double> shift(d, 0.0);
  std::vector<double> scale(d, 0.0);
  if (mode == NormalizationMode::kMinMax) {
    for (std::size_t k = 0; k < d; ++k) {
      double lo = batch(0, 0, k);
      double hi = lo;
      for (std::size_t s = 0; s < batch.samples(); ++s) {
        for (std::size_t t = 0; t < batch.steps(); ++t) {
          lo = std::min(lo, batch(s, t, k));
          hi = std::max(hi, batch(s, t, k));
        }
      }
      if (!(hi > lo)) {
        throw DataError("normalizer: degenerate dimension '" + batch.labels()[k] + "' (max == min)");
      }
      shift[k] = lo;
      scale[k] = hi - lo;
    }
  } else {
    for (std::size_t k = 0; k < d; ++k) {
      double acc = 0.0;
      for (std::size_t s = 0; s < batch.samples(); ++s) {
        const double x0 = batch(s, 0, k);
        if (!(x0 > 0.0)) {
          throw DataError("normalizer: non-positive initial value in dimension '" +
                          batch.labels()[k] + "'");
        }
        acc += x0;
      }
      scale[k] = acc / static_cast<double>(batch.samples());
    }
  }
  return Normalizer(mode, std::move(shift), std::move(scale));
}

PathBatch Normalizer::apply(const PathBatch& batch) const {
  if (batch.dims() != dims()) throw ShapeError("normalizer: dimension mismatch");
  PathBatch out = batch;
  for (std::size_t s = 0; s < batch.samples(); ++s) {
    for (std::size_t k = 0; k < batch.dims(); ++k) {
      const double x0 = batch(s, 0, k);
      if (mode_ == NormalizationMode::kInitialValueRatio && !(x0 > 0.0)) {
        throw DataError("normalizer: non-positive initial value in dimension '" +
                        batch.labels()[k] + "'");
      }
      for (std::size_t t = 0; t < batch.steps(); ++t) {
        out(s, t, k) = mode_ == NormalizationMode::kMinMax ? (batch(s, t, k) - shift_[k]) / scale_[k]
                                                         : batch(s, t, k) / x0;
      }
    }
  }
  return out;
}

PathBatch Normalizer::invert(const PathBatch& batch) const {
  if (mode_ == NormalizationMode::kMinMax) return invert(batch, Tensor());
  Tensor anchors = Tensor::matrix(batch.samples(), batch.dims());
  for (std::size_t s = 0; s < batch.samples(); ++s) {
    for (std::size_t k = 0; k < batch.dims(); ++k) anchors(s, k) = scale_[k];
  }
  return invert(batch, anchors);
}

PathBatch Normalizer::invert(const PathBatch& batch, const Tensor& anchors) const {
  if (batch.dims() != dims()) throw ShapeError("normalizer: dimension mismatch");
  PathBatch out = batch;
  if (mode_ == NormalizationMode::kMinMax) {
    for (std::size_t s = 0; s < batch.samples(); ++s) {
      for (std::size_t t = 0; t < batch.steps(); ++t) {
        for (std::size_t k = 0; k < batch.dims(); ++k) {
          out(s, t, k) = batch(s, t, k) * scale_[k] + shift_[k];
        }
      }
    }
    return out;
  }
  if (anchors.rows() != batch.samples() || anchors.cols() != batch.dims()) {
    throw ShapeError("normalizer: anchors shape " + shape_string(anchors.shape()) +
                     " does not match batch");
  }
  for (std::size_t s = 0; s < batch.samples(); ++s) {
    for (std::size_t t = 0; t < batch.steps(); ++t) {
      for (std::size_t k = 0; k < batch.dims(); ++k) out(s, t, k) = batch(s, t, k) * anchors(s, k);
    }
  }
  return out;
}

Tensor initial_values(const PathBatch& batch) { return batch.time_slice(0); }

PathBatch rebase(const PathBatch& batch, const Tensor& starts) {
  if (starts.rows() != batch.samples() || starts.cols() != batch.dims()) {
    throw ShapeError("rebase: starts shape " + shape_string(starts.shape()) +
                     " does not match batch of " + std::to_string(batch.samples()) + "x" +
                     std::to_string(batch.dims()));
  }
  PathBatch out = batch;
  for (std::size_t s = 0; s < batch.samples(); ++s) {
    for (std::size_t k = 0; k < batch.dims(); ++k) {
      const double x0 = batch(s, 0, k);
      if (!(x0 > 0.0)) throw DataError("rebase: non-positive first value");
      const double factor = starts(s, k) / x0;
      for (std::size_t t = 1; t < batch.steps(); ++t) out(s, t, k) = batch(s, t, k) * factor;
      out(s, 0, k) = starts(s, k);
    }
  }
  return out;
}

PathBatch rebase(const PathBatch& batch, std::span<const double> s0) {
  if (s0.size() != batch.dims()) {
    throw ShapeError("rebase: s0 has " + std::to_string(s0.size()) + " entries for " +
                     std::to_string(batch.dims()) + " dims");
  }
  Tensor starts = Tensor::matrix(batch.samples(), batch.dims());
  for (std::size_t s = 0; s < batch.samples(); ++s) {
    for (std::size_t k = 0; k < batch.dims(); ++k) starts(s, k) = s0[k];
  }
  return rebase(batch, starts);
}

}  // namespace csynth::data

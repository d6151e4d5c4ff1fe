#include "csynth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csynth/errors.hpp"

namespace csynth::metrics {

namespace {

void check_compatible(const data::PathBatch& real, const data::PathBatch& fake, const char* op) {
  if (real.steps() != fake.steps() || real.dims() != fake.dims()) {
    throw ShapeError(std::string(op) + ": real is " + std::to_string(real.steps()) + "x" +
                     std::to_string(real.dims()) + " per path, fake is " + std::to_string(fake.steps()) +
                     "x" + std::to_string(fake.dims()));
  }
  if (real.empty() || fake.empty()) throw ShapeError(std::string(op) + ": empty batch");
}

// Summation in sorted order, so results do not depend on sample order.
double ordered_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

std::vector<double> column(const data::PathBatch& b, std::size_t t, std::size_t k) {
  std::vector<double> v(b.samples());
  for (std::size_t s = 0; s < b.samples(); ++s) v[s] = b(s, t, k);
  return v;
}

std::vector<double> pearson_at(const data::PathBatch& batch, std::size_t t) {
  std::vector<double> c = covariance_at(batch, t);
  const std::size_t d = batch.dims();
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double denom = std::sqrt(c[i * d + i] * c[j * d + j]);
      out[i * d + j] = i == j ? 1.0 : (denom > 0.0 ? c[i * d + j] / denom : 0.0);
    }
  }
  return out;
}

template <typename MatrixFn>
double matrix_metric(const data::PathBatch& real, const data::PathBatch& fake, MatrixFn fn) {
  const std::size_t d = real.dims();
  if (d < 2) return 0.0;
  double total = 0.0;
  for (std::size_t t = 0; t < real.steps(); ++t) {
    const auto a = fn(real, t);
    const auto b = fn(fake, t);
    for (std::size_t e = 0; e < d * d; ++e) total += (a[e] - b[e]) * (a[e] - b[e]);
  }
  return total / static_cast<double>(real.steps() * d * d);
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double qvar(std::span<const double> series) {
  double s = 0.0;
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    const double d = series[t + 1] - series[t];
    s += d * d;
  }
  return s;
}

MarginalMetrics marginal_metrics(const data::PathBatch& real, const data::PathBatch& fake) {
  check_compatible(real, fake, "marginal_metrics");
  const std::size_t d = real.dims();
  MarginalMetrics m{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t t = 0; t < real.steps(); ++t) {
      auto a = column(real, t, k);
      auto b = column(fake, t, k);
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      const double dp05 = data::quantile_sorted(a, 0.05) - data::quantile_sorted(b, 0.05);
      const double dp95 = data::quantile_sorted(a, 0.95) - data::quantile_sorted(b, 0.95);
      const double davg = ordered_sum(a) / static_cast<double>(a.size()) -
                          ordered_sum(b) / static_cast<double>(b.size());
      m.p05[k] += dp05 * dp05;
      m.p95[k] += dp95 * dp95;
      m.avg[k] += davg * davg;
    }
    const auto steps = static_cast<double>(real.steps());
    m.p05[k] /= steps;
    m.avg[k] /= steps;
    m.p95[k] /= steps;
  }
  return m;
}

std::vector<double> mean_qvar(const data::PathBatch& batch) {
  std::vector<double> out(batch.dims());
  for (std::size_t k = 0; k < batch.dims(); ++k) {
    std::vector<double> q(batch.samples());
    for (std::size_t s = 0; s < batch.samples(); ++s) q[s] = qvar(batch.series(s, k));
    out[k] = ordered_sum(q) / static_cast<double>(batch.samples());
  }
  return out;
}

std::vector<double> qvar_metric(const data::PathBatch& real, const data::PathBatch& fake) {
  check_compatible(real, fake, "qvar_metric");
  const auto a = mean_qvar(real);
  const auto b = mean_qvar(fake);
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (a[k] - b[k]) * (a[k] - b[k]);
  return out;
}

std::vector<double> covariance_at(const data::PathBatch& batch, std::size_t t) {
  const std::size_t d = batch.dims();
  const std::size_t n = batch.samples();
  std::vector<double> mean(d);
  for (std::size_t k = 0; k < d; ++k) {
    auto v = column(batch, t, k);
    mean[k] = ordered_sum(v) / static_cast<double>(n);
  }
  std::vector<double> out(d * d);
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      for (std::size_t s = 0; s < n; ++s) prod[s] = (batch(s, t, i) - mean[i]) * (batch(s, t, j) - mean[j]);
      out[i * d + j] = out[j * d + i] = ordered_sum(prod) / static_cast<double>(n);
    }
  }
  return out;
}

double corr_metric(const data::PathBatch& real, const data::PathBatch& fake) {
  check_compatible(real, fake, "corr_metric");
  return matrix_metric(real, fake, covariance_at);
}

double pearson_corr_metric(const data::PathBatch& real, const data::PathBatch& fake) {
  check_compatible(real, fake, "pearson_corr_metric");
  return matrix_metric(real, fake, pearson_at);
}

nlohmann::ordered_json MetricReport::summary_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["real_id"] = real_id;
  j["fake_id"] = fake_id;
  j["n_real"] = n_real;
  j["n_fake"] = n_fake;
  j["steps"] = steps;
  j["dims"] = d;
  j["low_confidence"] = low_confidence;
  auto& per = j["per_dim"] = nlohmann::ordered_json::array();
  for (const auto& m : dims) {
    per.push_back({{"dim", m.dim}, {"p05", m.p05}, {"avg", m.avg}, {"p95", m.p95}, {"qvar", m.qvar}});
  }
  j["corr"] = corr;
  j["corr_pearson"] = corr_pearson;
  if (!note.empty()) j["note"] = note;
  return j;
}

MetricReport metric_report(const data::PathBatch& real, const data::PathBatch& fake, std::string model,
                           std::string real_id, std::string fake_id) {
  check_compatible(real, fake, "metric_report");
  MetricReport r;
  r.model = std::move(model);
  r.real_id = std::move(real_id);
  r.fake_id = std::move(fake_id);
  r.n_real = real.samples();
  r.n_fake = fake.samples();
  r.steps = real.steps();
  r.d = real.dims();
  r.low_confidence = real.samples() < kLowConfidenceSamples || fake.samples() < kLowConfidenceSamples;
  const auto marg = marginal_metrics(real, fake);
  const auto qv = qvar_metric(real, fake);
  for (std::size_t k = 0; k < real.dims(); ++k) {
    r.dims.push_back({real.labels()[k], marg.p05[k], marg.avg[k], marg.p95[k], qv[k]});
  }
  r.corr = corr_metric(real, fake);
  r.corr_pearson = pearson_corr_metric(real, fake);
  if (real.dims() == 1) r.note = "corr defined as 0 for a single dimension";
  return r;
}

void unit_scale(data::PathBatch& real, data::PathBatch& fake) {
  if (real.dims() != fake.dims()) throw ShapeError("unit_scale: dimension mismatch");
  for (std::size_t k = 0; k < real.dims(); ++k) {
    double m = 0.0;
    for (std::size_t s = 0; s < real.samples(); ++s) m += real(s, 0, k);
    m /= static_cast<double>(real.samples());
    if (!(std::abs(m) > 0.0)) throw DataError("unit_scale: zero mean initial value in '" + real.labels()[k] + "'");
    for (auto* b : {&real, &fake}) {
      for (std::size_t s = 0; s < b->samples(); ++s) {
        for (std::size_t t = 0; t < b->steps(); ++t) (*b)(s, t, k) /= m;
      }
    }
  }
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

std::string format_report_csv(std::span<const MetricReport> reports) {
  std::string out(kReportHeader);
  out += '\n';
  for (const auto& r : reports) {
    for (const auto& m : r.dims) {
      out += r.model + ',' + m.dim + ',' + format_value(m.p05) + ',' + format_value(m.avg) + ',' +
             format_value(m.p95) + ',' + format_value(m.qvar) + ',' + format_value(r.corr) + '\n';
    }
  }
  return out;
}

void write_report_csv(std::span<const MetricReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report '" + path.string() + "'");
  out << format_report_csv(reports);
  if (!out) throw DataError("failed writing report '" + path.string() + "'");
}

std::vector<MetricReport> parse_report_csv(std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) {
    throw DataError(std::string(source) + ":1: expected header '" + std::string(kReportHeader) + "'");
  }
  std::vector<MetricReport> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 7) {
      throw DataError(std::string(source) + ":" + std::to_string(lineno) + ": expected 7 cells, got " +
                      std::to_string(cells.size()));
    }
    double v[5];
    for (int i = 0; i < 5; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(cells[2 + i], &used);
        if (used != cells[2 + i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError(std::string(source) + ":" + std::to_string(lineno) + ": unparsable number '" +
                        cells[2 + i] + "'");
      }
    }
    if (out.empty() || out.back().model != cells[0]) {
      out.emplace_back();
      out.back().model = cells[0];
      out.back().corr = v[4];
    }
    out.back().dims.push_back({cells[1], v[0], v[1], v[2], v[3]});
    out.back().d = out.back().dims.size();
  }
  return out;
}

}  // namespace csynth::metrics

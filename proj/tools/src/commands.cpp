#include "csynth_tools/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "csynth/checkpoint.hpp"
#include "csynth/errors.hpp"
#include "csynth/generator_model.hpp"
#include "csynth/metrics.hpp"
#include "csynth/rng.hpp"
#include "csynth/stochastic.hpp"
#include "csynth_tools/manifest.hpp"

namespace csynth::cli {

namespace fs = std::filesystem;

namespace {

std::string sci(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

gen::GeneratorModel require_generator(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("missing generator checkpoint: expected " + path.string());
  return ckpt::load_generator(path);
}

Tensor window_starts(const data::PathBatch& real, std::size_t n) {
  Tensor starts = Tensor::matrix(n, real.dims());
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t k = 0; k < real.dims(); ++k) starts(s, k) = real(s % real.samples(), 0, k);
  }
  return starts;
}

std::string portfolio_csv(const hedge::HedgeEval& ev) {
  std::string out = "underlying,payoff,portfolio\n";
  for (std::size_t i = 0; i < ev.payoff.size(); ++i) {
    out += sci(ev.underlying[i], 6) + "," + sci(ev.payoff[i], 6) + "," + sci(ev.portfolio[i], 6) + "\n";
  }
  return out;
}

struct ReplRow {
  std::string model;
  std::string case_name;
  double init_risk = 0.0;
  double repl_loss = 0.0;
};

std::vector<ReplRow> parse_repl(const fs::path& file) {
  const auto lines = lines_of(read_file(file));
  if (lines.empty() || lines.front() != kReplHeader) {
    throw DataError("schema mismatch in " + file.string() + ": expected header '" + kReplHeader + "'");
  }
  std::vector<ReplRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i]);
    if (f.size() != 4) {
      throw DataError("schema mismatch in " + file.string() + ": line " + std::to_string(i + 1) + " has " +
                      std::to_string(f.size()) + " columns, expected 4");
    }
    try {
      rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3])});
    } catch (const std::exception&) {
      throw DataError("schema mismatch in " + file.string() + ": line " + std::to_string(i + 1) + " is not numeric");
    }
  }
  return rows;
}

/// Ordered table of rows x columns with optional cells; the minimum of each row is starred.
struct JoinTable {
  std::vector<std::string> key_header;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> keys;
  std::vector<std::map<std::string, double>> cells;

  std::size_t row(const std::vector<std::string>& key) {
    const auto it = std::find(keys.begin(), keys.end(), key);
    if (it != keys.end()) return static_cast<std::size_t>(it - keys.begin());
    keys.push_back(key);
    cells.emplace_back();
    return keys.size() - 1;
  }

  void column(const std::string& name) {
    if (std::find(columns.begin(), columns.end(), name) == columns.end()) columns.push_back(name);
  }

  [[nodiscard]] std::string csv(const std::vector<std::string>& fixed = {}) const {
    std::string out;
    for (const auto& h : key_header) out += h + ",";
    for (std::size_t c = 0; c < columns.size(); ++c) out += columns[c] + (c + 1 < columns.size() ? "," : "\n");
    const bool mark = std::count_if(columns.begin(), columns.end(), [&](const std::string& c) {
                        return std::find(fixed.begin(), fixed.end(), c) == fixed.end();
                      }) >= 2;
    for (std::size_t r = 0; r < keys.size(); ++r) {
      double best = 0.0;
      bool have = false;
      for (const auto& [name, v] : cells[r]) {
        if (std::find(fixed.begin(), fixed.end(), name) != fixed.end()) continue;
        if (!have || v < best) best = v;
        have = true;
      }
      for (const auto& k : keys[r]) out += k + ",";
      for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto it = cells[r].find(columns[c]);
        if (it != cells[r].end()) {
          out += metrics::format_value(it->second);
          const bool is_fixed = std::find(fixed.begin(), fixed.end(), columns[c]) != fixed.end();
          if (mark && !is_fixed && metrics::format_value(it->second) == metrics::format_value(best)) out += "*";
        }
        out += c + 1 < columns.size() ? "," : "\n";
      }
    }
    return out;
  }
};

std::string unique_name(const JoinTable& t, const std::string& name) {
  std::string out = name;
  for (int i = 2; std::find(t.columns.begin(), t.columns.end(), out) != t.columns.end(); ++i) {
    out = name + "#" + std::to_string(i);
  }
  return out;
}

std::string first_line(const fs::path& file) {
  const auto lines = lines_of(read_file(file));
  return lines.empty() ? std::string() : lines.front();
}

}  // namespace

fs::path command_dir(const ExperimentConfig& cfg, const std::string& command, const std::optional<fs::path>& out) {
  if (out) return *out;
  return fs::path(cfg.output_dir) / command;
}

void cmd_preprocess(const ExperimentConfig& cfg, const fs::path& out) {
  const auto table = load_prices(cfg.data);
  const auto windows = data::windowize(table, cfg.data.window, cfg.data.stride);
  RunWriter w(out, "preprocess", cfg.hash());
  w.write("prices.csv", data::format_csv(table));
  w.write("dataset.json", dataset_json(windows).dump() + "\n");
  w.set_info("shape", {windows.samples(), windows.steps(), windows.dims()});
  w.set_info("labels", windows.labels());
  w.set_info("jump_filter", cfg.data.jump_filter);
  w.finish();
  std::cout << "preprocess: " << windows.samples() << " windows of " << windows.steps() << " x " << windows.dims()
            << " -> " << out.string() << "\n";
}

void cmd_train_gen(const ExperimentConfig& cfg, const fs::path& out) {
  const auto windows = load_windows(cfg.data);
  RunWriter w(out, "train-gen", cfg.hash());
  const std::size_t every = std::max<std::size_t>(1, cfg.generator.iterations / 10);
  const auto model = gen::train_generator(windows, cfg.generator, [&](std::size_t it, double g, std::optional<double> d) {
    if ((it + 1) % every == 0) {
      std::cerr << "  iteration " << it + 1 << " gen_loss " << g;
      if (d) std::cerr << " disc_loss " << *d;
      std::cerr << "\n";
    }
  });
  ckpt::save_generator(model, out / "generator.json");
  w.record("generator.json");
  w.write("loss_curve.csv", model.meta.curve.to_csv());
  w.set_info("kind", std::string(gen::to_string(model.kind)));
  w.set_info("iterations", cfg.generator.iterations);
  w.set_info("shape", {windows.samples(), windows.steps(), windows.dims()});
  w.finish();
  std::cout << "train-gen: " << gen::to_string(model.kind) << " -> " << out.string() << "\n";
}

void cmd_eval_gen(const ExperimentConfig& cfg, const fs::path& out) {
  const auto real = load_windows(cfg.data);
  data::PathBatch fake;
  std::string model_name;
  if (cfg.checkpoint == "reference") {
    fake = real;
    model_name = "reference";
  } else {
    const auto model = require_generator(cfg.generator_checkpoint());
    if (model.seq_len != real.steps() || model.dim != real.dims()) {
      throw DataError("eval-gen: checkpoint shape " + std::to_string(model.seq_len) + "x" + std::to_string(model.dim) +
                      " does not match the data windows " + std::to_string(real.steps()) + "x" +
                      std::to_string(real.dims()));
    }
    const std::size_t n = cfg.metrics.samples;
    fake = data::rebase(model.sample(n, derive_seed(cfg.seed, "eval")), window_starts(real, n));
    model_name = std::string(gen::to_string(model.kind));
  }
  RunWriter w(out, "eval-gen", cfg.hash());
  const std::vector<metrics::MetricReport> raw{metrics::metric_report(real, fake, model_name, cfg.data.source, model_name)};
  w.write("report.csv", metrics::format_report_csv(raw));
  nlohmann::ordered_json summary;
  summary["raw"] = raw.front().summary_json();
  if (cfg.metrics.unit_scale) {
    auto r = real;
    auto f = fake;
    metrics::unit_scale(r, f);
    const std::vector<metrics::MetricReport> unit{metrics::metric_report(r, f, model_name, cfg.data.source, model_name)};
    w.write("report_unit.csv", metrics::format_report_csv(unit));
    summary["unit"] = unit.front().summary_json();
  }
  w.write("summary.json", summary.dump(2) + "\n");
  w.finish();
  std::cout << "eval-gen: " << model_name << " vs " << real.samples() << " windows -> " << out.string() << "\n";
}

void cmd_hedge(const ExperimentConfig& cfg, const fs::path& out) {
  const auto table = load_prices(cfg.data);
  const auto windows = data::windowize(table, cfg.data.window, cfg.data.stride);
  const auto spec = make_spec(cfg.hedging, table, cfg.data.window);
  const fs::path ckpt_path = cfg.hedge_checkpoint();
  gen::GeneratorModel model;
  if (fs::exists(ckpt_path)) {
    model = ckpt::load_generator(ckpt_path);
  } else if (cfg.generator.kind == gen::Kind::kGbm) {
    model = gen::train_generator(windows, cfg.generator);
  } else {
    throw DataError("missing generator checkpoint: expected " + ckpt_path.string());
  }
  if (model.seq_len != spec.steps + 1 || model.dim != windows.dims()) {
    throw DataError("hedge: generator produces " + std::to_string(model.seq_len) + "x" + std::to_string(model.dim) +
                    " paths, the hedge needs " + std::to_string(spec.steps + 1) + "x" + std::to_string(windows.dims()));
  }
  const hedge::Sampler sampler = [&](std::size_t n, std::uint64_t seed) { return model.sample(n, seed, spec.s0); };
  const auto test = data::rebase(windows, spec.s0);
  RunWriter w(out, "hedge", cfg.hash());
  const auto trained = hedge::train_hedger(sampler, spec, cfg.hedging.hedger, test);
  const auto ev = hedge::eval_hedger(trained.policy, test);
  const std::string kind(gen::to_string(model.kind));

  std::string report = std::string(kReplHeader) + "\n";
  report += kind + "," + spec.case_name + "," + sci(ev.init_risk) + "," + sci(ev.repl_loss) + "\n";
  if (cfg.hedging.bs_baseline && spec.case_name == "call") {
    const std::size_t u = spec.payoff.index;
    const double sigma = stoch::calibrate_gbm(windows).sigma[u];
    const auto bs = hedge::bs_delta_strategy(test, spec, sigma);
    report += "BS," + spec.case_name + "," + sci(bs.eval.init_risk) + "," + sci(bs.eval.repl_loss) + "\n";
    w.set_info("bs_sigma", sigma);
  }
  trained.policy.save(out / "hedger.json");
  w.record("hedger.json");
  w.write("repl_report.csv", report);
  w.write("portfolio.csv", portfolio_csv(ev));
  w.write("hedge_curve.csv", trained.curves.to_csv());
  w.set_info("kind", kind);
  w.set_info("case", spec.case_name);
  w.set_info("spec", spec.to_json());
  w.set_info("premium", trained.policy.premium());
  w.finish();
  std::cout << "hedge: " << kind << " " << spec.case_name << " init_risk " << sci(ev.init_risk) << " repl_loss "
            << sci(ev.repl_loss) << " -> " << out.string() << "\n";
}

std::string join_reports(const std::vector<fs::path>& files) {
  if (files.empty()) throw DataError("report: no report files to join");
  std::vector<std::string> metric_files;
  std::vector<std::string> repl_files;
  std::vector<std::string> bad;
  for (const auto& f : files) {
    const std::string h = first_line(f);
    if (h == metrics::kReportHeader) {
      metric_files.push_back(f.string());
    } else if (h == kReplHeader) {
      repl_files.push_back(f.string());
    } else {
      bad.push_back(f.string() + " (header '" + h + "')");
    }
  }
  auto list = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += "\n  " + s;
    return out;
  };
  if (!bad.empty()) throw DataError("report: schema mismatch in:" + list(bad));
  if (!metric_files.empty() && !repl_files.empty()) {
    throw DataError("report: cannot join metric reports with replication reports; metric:" + list(metric_files) +
                    "\nreplication:" + list(repl_files));
  }

  JoinTable table;
  if (!metric_files.empty()) {
    table.key_header = {"dim", "metric"};
    for (const auto& f : metric_files) {
      const auto reports = metrics::parse_report_csv(read_file(f), f);
      for (const auto& r : reports) {
        const std::string col = unique_name(table, r.model);
        table.column(col);
        for (const auto& d : r.dims) {
          table.cells[table.row({d.dim, "p05"})][col] = d.p05;
          table.cells[table.row({d.dim, "avg"})][col] = d.avg;
          table.cells[table.row({d.dim, "p95"})][col] = d.p95;
          table.cells[table.row({d.dim, "qvar"})][col] = d.qvar;
        }
        table.cells[table.row({"all", "corr"})][col] = r.corr;
      }
    }
    return table.csv();
  }
  table.key_header = {"case"};
  table.column("init_risk");
  for (const auto& f : repl_files) {
    for (const auto& r : parse_repl(f)) {
      const std::size_t row = table.row({r.case_name});
      table.cells[row].try_emplace("init_risk", r.init_risk);
      std::string col = r.model;
      const auto it = table.cells[row].find(col);
      if (it != table.cells[row].end()) {
        if (metrics::format_value(it->second) == metrics::format_value(r.repl_loss)) continue;
        col = unique_name(table, r.model);
      }
      table.column(col);
      table.cells[row][col] = r.repl_loss;
    }
  }
  return table.csv({"init_risk"});
}

void cmd_report(const std::vector<fs::path>& runs, const fs::path& out) {
  if (runs.empty()) throw ConfigError("report: pass at least one run directory or report file");
  std::vector<fs::path> metric_files;
  std::vector<fs::path> repl_files;
  for (const auto& run : runs) {
    if (fs::is_regular_file(run)) {
      (first_line(run) == kReplHeader ? repl_files : metric_files).push_back(run);
      continue;
    }
    if (!fs::is_directory(run)) throw DataError("report: no such run directory " + run.string());
    const std::size_t before = metric_files.size() + repl_files.size();
    for (const auto& p : {run / "report.csv", run / "eval-gen" / "report.csv"}) {
      if (fs::exists(p)) metric_files.push_back(p);
    }
    for (const auto& p : {run / "repl_report.csv", run / "hedge" / "repl_report.csv"}) {
      if (fs::exists(p)) repl_files.push_back(p);
    }
    if (metric_files.size() + repl_files.size() == before) {
      throw DataError("report: " + run.string() + " contains no report.csv or repl_report.csv");
    }
  }
  RunWriter w(out, "report", "");
  if (!metric_files.empty()) w.write("comparison.csv", join_reports(metric_files));
  if (!repl_files.empty()) w.write("comparison_hedge.csv", join_reports(repl_files));
  nlohmann::ordered_json sources = nlohmann::ordered_json::array();
  for (const auto& f : metric_files) sources.push_back(f.string());
  for (const auto& f : repl_files) sources.push_back(f.string());
  w.set_info("sources", sources);
  w.finish();
  std::cout << "report: joined " << metric_files.size() + repl_files.size() << " files -> " << out.string() << "\n";
}

int report_failure(const std::exception& e, const fs::path& dir) {
  int code = kExitOther;
  std::string kind = "error";
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
    code = kExitConfig;
    kind = "config error";
  } else if (dynamic_cast<const NumericError*>(&e) != nullptr) {
    code = kExitNumeric;
    kind = "numeric failure";
  } else if (dynamic_cast<const DataError*>(&e) != nullptr || dynamic_cast<const ShapeError*>(&e) != nullptr ||
             dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) {
    code = kExitData;
    kind = "data error";
  }
  std::cerr << "csynth: " << kind << ": " << e.what() << "\n";
  if (!dir.empty()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream f(dir / "failure.txt", std::ios::trunc);
    if (f) f << kind << "\nexit_code " << code << "\n" << e.what() << "\n";
  }
  return code;
}

}  // namespace csynth::cli

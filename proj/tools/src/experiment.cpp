#include "csynth_tools/experiment.hpp"

#include <algorithm>
#include <fstream>

#include "csynth/errors.hpp"
#include "csynth/hash.hpp"
#include "csynth/reference_data.hpp"

namespace csynth::cli {

namespace {

void reject_unknown(const nlohmann::json& j, const nlohmann::ordered_json& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

nlohmann::ordered_json data_json(const DataOptions& d) {
  return {{"source", d.source}, {"jump_filter", d.jump_filter}, {"quantile", d.quantile},
          {"window", d.window}, {"stride", d.stride}};
}

nlohmann::ordered_json hedging_json(const HedgeOptions& h) {
  nlohmann::ordered_json j;
  j["case"] = h.case_name;
  j["strike"] = h.strike ? nlohmann::ordered_json(*h.strike) : nlohmann::ordered_json(nullptr);
  j["underlying"] = h.underlying;
  j["proxy"] = h.proxy;
  j["spread_long"] = h.spread_long;
  j["spread_short"] = h.spread_short;
  j["checkpoint"] = h.checkpoint;
  j["bs_baseline"] = h.bs_baseline;
  j["hedger"] = h.hedger.to_json();
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (data.window < 2) throw ConfigError("experiment: data.window must be >= 2");
  if (data.stride == 0) throw ConfigError("experiment: data.stride must be >= 1");
  if (!(data.quantile > 0.0 && data.quantile <= 1.0)) throw ConfigError("experiment: data.quantile must be in (0, 1]");
  if (hedging.case_name != "call" && hedging.case_name != "proxy" && hedging.case_name != "spread") {
    throw ConfigError("experiment: hedging.case must be call, proxy or spread, got '" + hedging.case_name + "'");
  }
  if (metrics.samples == 0) throw ConfigError("experiment: metrics.samples must be >= 1");
  generator.validate();
  hedging.hedger.validate();
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["data"] = data_json(data);
  j["generator"] = generator.to_json();
  j["hedging"] = hedging_json(hedging);
  j["metrics"] = {{"samples", metrics.samples}, {"unit_scale", metrics.unit_scale}};
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["checkpoint"] = checkpoint;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  const auto known = c.to_json();
  reject_unknown(j, known, "experiment");
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      reject_unknown(d, known.at("data"), "experiment.data");
      c.data.source = d.value("source", c.data.source);
      c.data.jump_filter = d.value("jump_filter", c.data.jump_filter);
      c.data.quantile = d.value("quantile", c.data.quantile);
      c.data.window = d.value("window", c.data.window);
      c.data.stride = d.value("stride", c.data.stride);
    }
    if (j.contains("generator")) c.generator = gen::TrainConfig::from_json(j.at("generator"));
    if (j.contains("hedging")) {
      const auto& h = j.at("hedging");
      reject_unknown(h, known.at("hedging"), "experiment.hedging");
      c.hedging.case_name = h.value("case", c.hedging.case_name);
      if (h.contains("strike") && !h.at("strike").is_null()) c.hedging.strike = h.at("strike").get<double>();
      c.hedging.underlying = h.value("underlying", c.hedging.underlying);
      c.hedging.proxy = h.value("proxy", c.hedging.proxy);
      c.hedging.spread_long = h.value("spread_long", c.hedging.spread_long);
      c.hedging.spread_short = h.value("spread_short", c.hedging.spread_short);
      c.hedging.checkpoint = h.value("checkpoint", c.hedging.checkpoint);
      c.hedging.bs_baseline = h.value("bs_baseline", c.hedging.bs_baseline);
      if (h.contains("hedger")) c.hedging.hedger = hedge::HedgerConfig::from_json(h.at("hedger"));
    }
    if (j.contains("metrics")) {
      const auto& m = j.at("metrics");
      reject_unknown(m, known.at("metrics"), "experiment.metrics");
      c.metrics.samples = m.value("samples", c.metrics.samples);
      c.metrics.unit_scale = m.value("unit_scale", c.metrics.unit_scale);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.set_seed(j.value("seed", c.seed));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::string ExperimentConfig::hash() const {
  auto j = to_json();
  j.erase("output_dir");
  return hex64(fnv1a64(j.dump()));
}

void ExperimentConfig::set_seed(std::uint64_t value) {
  seed = value;
  generator.seed = value;
  hedging.hedger.seed = value;
}

std::filesystem::path ExperimentConfig::generator_checkpoint() const {
  if (!checkpoint.empty()) return checkpoint;
  return std::filesystem::path(output_dir) / "train-gen" / "generator.json";
}

std::filesystem::path ExperimentConfig::hedge_checkpoint() const {
  if (!hedging.checkpoint.empty()) return hedging.checkpoint;
  return std::filesystem::path(output_dir) / "train-gen" / "generator.json";
}

data::PriceTable load_raw_prices(const DataOptions& opts) {
  if (opts.source == "bundled") return stoch::reference_price_table();
  return data::load_csv(opts.source);
}

data::PriceTable load_prices(const DataOptions& opts) {
  auto table = load_raw_prices(opts);
  if (opts.jump_filter) table = data::jump_filter(table, opts.quantile);
  return table;
}

data::PathBatch load_windows(const DataOptions& opts) {
  return data::windowize(load_prices(opts), opts.window, opts.stride);
}

hedge::HedgingSpec make_spec(const HedgeOptions& opts, const data::PriceTable& table, std::size_t window) {
  if (table.rows() == 0) throw DataError("hedging: empty price table");
  hedge::HedgingSpec spec;
  spec.case_name = opts.case_name;
  spec.steps = window - 1;
  spec.maturity = static_cast<double>(spec.steps) * data::kDailyDt;
  spec.s0.resize(table.dims());
  for (std::size_t k = 0; k < table.dims(); ++k) spec.s0[k] = table.columns[k][0];
  if (opts.case_name == "spread") {
    const std::size_t a = table.column_index(opts.spread_long);
    const std::size_t b = table.column_index(opts.spread_short);
    spec.payoff = hedge::Payoff::spread_call(a, b, opts.strike.value_or(42.41));
    spec.tradable = {a, b};
  } else {
    const std::size_t u = table.column_index(opts.underlying);
    spec.payoff = hedge::Payoff::call(u, opts.strike.value_or(spec.s0[u]));
    spec.tradable = {opts.case_name == "proxy" ? table.column_index(opts.proxy) : u};
  }
  spec.validate(table.dims());
  return spec;
}

nlohmann::ordered_json dataset_json(const data::PathBatch& batch) {
  nlohmann::ordered_json j;
  j["format"] = "csynth-dataset";
  j["version"] = 1;
  j["shape"] = {batch.samples(), batch.steps(), batch.dims()};
  j["labels"] = batch.labels();
  j["dt"] = batch.dt();
  j["data"] = std::vector<double>(batch.data().begin(), batch.data().end());
  return j;
}

data::PathBatch dataset_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "csynth-dataset") throw DataError("dataset: not a csynth dataset");
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw DataError("dataset: shape must have 3 entries");
    const auto values = j.at("data").get<std::vector<double>>();
    if (values.size() != shape[0] * shape[1] * shape[2]) throw DataError("dataset: data size does not match shape");
    data::PathBatch b(shape[0], shape[1], shape[2], j.at("labels").get<std::vector<std::string>>(),
                      j.at("dt").get<double>());
    std::copy(values.begin(), values.end(), b.data().begin());
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("dataset: ") + e.what());
  }
}

}  // namespace csynth::cli

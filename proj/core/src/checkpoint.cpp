#include "csynth/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "csynth/errors.hpp"

namespace csynth::ckpt {

namespace {

nlohmann::ordered_json block_json(const std::string& name, const Tensor& t) {
  nlohmann::ordered_json b;
  b["name"] = name;
  b["shape"] = t.shape();
  b["data"] = t.values();
  return b;
}

Tensor block_tensor(const nlohmann::json& b) {
  auto shape = b.at("shape").get<std::vector<std::size_t>>();
  auto values = b.at("data").get<std::vector<double>>();
  try {
    return Tensor(std::move(shape), std::move(values));
  } catch (const std::exception& e) {
    throw DataError("checkpoint: block '" + b.at("name").get<std::string>() + "': " + e.what());
  }
}

bool is_generator_kind(const std::string& kind) {
  try {
    (void)gen::parse_kind(kind);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

}  // namespace

nlohmann::ordered_json Checkpoint::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  j["kind"] = kind;
  j["cfg_hash"] = cfg_hash;
  if (normalizer) {
    j["normalizer"] = {{"mode", std::string(data::to_string(normalizer->mode()))},
                       {"shift", normalizer->shift()},
                       {"scale", normalizer->scale()}};
  } else {
    j["normalizer"] = nullptr;
  }
  j["seq_len"] = seq_len;
  j["dim"] = dim;
  j["labels"] = labels;
  j["param_seed"] = params.rng_seed();
  auto& ps = j["params"] = nlohmann::ordered_json::array();
  for (const auto& [name, value] : params) ps.push_back(block_json(name, value));
  auto& as = j["aux"] = nlohmann::ordered_json::array();
  for (const auto& [name, value] : aux) as.push_back(block_json(name, value));
  j["metadata"] = metadata;
  return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j, const std::string& expected_kind) {
  try {
    if (j.value("format", std::string()) != kFormatName) {
      throw DataError("checkpoint: not a csynth checkpoint");
    }
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) {
      throw DataError("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kFormatVersion) + ")");
    }
    Checkpoint c;
    c.kind = j.at("kind").get<std::string>();
    if (!expected_kind.empty() && c.kind != expected_kind) {
      throw DataError("checkpoint: kind '" + c.kind + "' does not match expected '" + expected_kind + "'");
    }
    c.cfg_hash = j.at("cfg_hash").get<std::string>();
    if (!j.at("normalizer").is_null()) {
      const auto& n = j.at("normalizer");
      c.normalizer = data::Normalizer(data::parse_normalization(n.at("mode").get<std::string>()),
                                      n.at("shift").get<std::vector<double>>(),
                                      n.at("scale").get<std::vector<double>>());
    }
    c.seq_len = j.at("seq_len").get<std::size_t>();
    c.dim = j.at("dim").get<std::size_t>();
    c.labels = j.at("labels").get<std::vector<std::string>>();
    c.params = ad::ParamSet(j.value("param_seed", std::uint64_t{0}));
    for (const auto& b : j.at("params")) c.params.add(b.at("name").get<std::string>(), block_tensor(b));
    for (const auto& b : j.at("aux")) c.aux[b.at("name").get<std::string>()] = block_tensor(b);
    c.metadata = j.at("metadata");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed container: ") + e.what());
  }
}

void save(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out << ckpt.to_json().dump(1) << '\n';
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load(const std::filesystem::path& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found: '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint '" + path.string() + "': " + e.what());
  }
  return Checkpoint::from_json(j, expected_kind);
}

Checkpoint to_checkpoint(const gen::GeneratorModel& model) {
  Checkpoint c;
  c.kind = std::string(gen::to_string(model.kind));
  c.cfg_hash = model.meta.config_hash;
  if (model.kind != gen::Kind::kGbm) c.normalizer = model.normalizer;
  c.seq_len = model.seq_len;
  c.dim = model.dim;
  c.labels = model.labels;
  c.params = model.params;
  c.aux = model.aux;
  auto& m = c.metadata;
  m["dt"] = model.dt;
  m["config"] = model.config.to_json();
  if (model.kind == gen::Kind::kGbm) m["gbm"] = model.gbm.to_json();
  m["iterations"] = model.meta.iterations;
  m["seed"] = model.meta.seed;
  m["loss_curve"] = {{"iteration", model.meta.curve.iteration},
                     {"gen_loss", model.meta.curve.gen_loss},
                     {"disc_loss", model.meta.curve.disc_loss},
                     {"has_discriminator", model.meta.curve.has_discriminator}};
  return c;
}

gen::GeneratorModel from_checkpoint(const Checkpoint& c) {
  if (!is_generator_kind(c.kind)) throw DataError("checkpoint: kind '" + c.kind + "' is not a generator");
  gen::GeneratorModel model;
  try {
    model.kind = gen::parse_kind(c.kind);
    model.config = gen::TrainConfig::from_json(c.metadata.at("config"));
    model.params = c.params;
    if (model.kind == gen::Kind::kGbm) {
      model.gbm = stoch::GbmParams::from_json(c.metadata.at("gbm"));
    } else {
      if (!c.normalizer) throw DataError("checkpoint: neural generator without normalizer");
      model.normalizer = *c.normalizer;
    }
    model.seq_len = c.seq_len;
    model.dim = c.dim;
    model.dt = c.metadata.at("dt").get<double>();
    model.labels = c.labels;
    model.aux = c.aux;
    model.meta.config_hash = c.cfg_hash;
    model.meta.iterations = c.metadata.at("iterations").get<std::size_t>();
    model.meta.seed = c.metadata.at("seed").get<std::uint64_t>();
    const auto& lc = c.metadata.at("loss_curve");
    model.meta.curve.iteration = lc.at("iteration").get<std::vector<std::size_t>>();
    model.meta.curve.gen_loss = lc.at("gen_loss").get<std::vector<double>>();
    model.meta.curve.disc_loss = lc.at("disc_loss").get<std::vector<double>>();
    model.meta.curve.has_discriminator = lc.at("has_discriminator").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed metadata: ") + e.what());
  }
  model.validate();
  return model;
}

void save_generator(const gen::GeneratorModel& model, const std::filesystem::path& path) {
  save(to_checkpoint(model), path);
}

gen::GeneratorModel load_generator(const std::filesystem::path& path) {
  return from_checkpoint(load(path));
}

}  // namespace csynth::ckpt

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csynth/dataio.hpp"
#include "csynth/generator_model.hpp"
#include "csynth/params.hpp"

namespace csynth::ckpt {

inline constexpr const char* kFormatName = "csynth-checkpoint";
inline constexpr int kFormatVersion = 1;

/// Self-describing model container. Field order on disk:
/// format, version, kind, cfg_hash, normalizer, seq_len, dim, labels, param_seed, params,
/// aux, metadata.
struct Checkpoint {
  std::string kind;
  std::string cfg_hash;
  std::optional<data::Normalizer> normalizer;
  std::size_t seq_len = 0;
  std::size_t dim = 0;
  std::vector<std::string> labels;
  ad::ParamSet params;
  std::map<std::string, Tensor> aux;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();

  [[nodiscard]] nlohmann::ordered_json to_json() const;
  /// Rejects unknown formats, other versions, and (when given) a different kind tag.
  static Checkpoint from_json(const nlohmann::json& j, const std::string& expected_kind = {});
};

void save(const Checkpoint& ckpt, const std::filesystem::path& path);
[[nodiscard]] Checkpoint load(const std::filesystem::path& path, const std::string& expected_kind = {});

[[nodiscard]] Checkpoint to_checkpoint(const gen::GeneratorModel& model);
[[nodiscard]] gen::GeneratorModel from_checkpoint(const Checkpoint& ckpt);

void save_generator(const gen::GeneratorModel& model, const std::filesystem::path& path);
[[nodiscard]] gen::GeneratorModel load_generator(const std::filesystem::path& path);

}  // namespace csynth::ckpt

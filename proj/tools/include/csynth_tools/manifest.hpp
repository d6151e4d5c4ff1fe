#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace csynth::cli {

inline constexpr const char* kManifestName = "manifest.json";

struct ManifestEntry {
  std::string path;
  std::size_t bytes = 0;
  std::string checksum;
};

/// Collects the files a command writes; the manifest itself is written last.
class RunWriter {
 public:
  RunWriter(std::filesystem::path dir, std::string command, std::string config_hash);

  [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Write `contents` to dir/name and record its checksum.
  void write(const std::string& name, std::string_view contents);
  /// Record a file already written by other code.
  void record(const std::string& name);
  void set_info(const std::string& key, nlohmann::ordered_json value);

  [[nodiscard]] const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }

  /// Write manifest.json atomically (via a temporary and rename).
  void finish();

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::string config_hash_;
  std::vector<ManifestEntry> entries_;
  nlohmann::ordered_json info_ = nlohmann::ordered_json::object();
};

[[nodiscard]] std::string read_file(const std::filesystem::path& path);
[[nodiscard]] std::string file_checksum(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json load_manifest(const std::filesystem::path& dir);

}  // namespace csynth::cli

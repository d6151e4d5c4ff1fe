#include "csynth_tools/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "csynth/errors.hpp"
#include "csynth/hash.hpp"

#ifndef CSYNTH_VERSION
#define CSYNTH_VERSION "unknown"
#endif

namespace csynth::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_bytes(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_checksum(const std::filesystem::path& path) { return hex64(fnv1a64(read_file(path))); }

RunWriter::RunWriter(std::filesystem::path dir, std::string command, std::string config_hash)
    : dir_(std::move(dir)), command_(std::move(command)), config_hash_(std::move(config_hash)) {
  std::filesystem::create_directories(dir_);
  std::filesystem::remove(dir_ / kManifestName);
}

void RunWriter::write(const std::string& name, std::string_view contents) {
  write_bytes(dir_ / name, contents);
  entries_.push_back({name, contents.size(), hex64(fnv1a64(contents))});
}

void RunWriter::record(const std::string& name) {
  const std::string bytes = read_file(dir_ / name);
  entries_.push_back({name, bytes.size(), hex64(fnv1a64(bytes))});
}

void RunWriter::set_info(const std::string& key, nlohmann::ordered_json value) { info_[key] = std::move(value); }

void RunWriter::finish() {
  nlohmann::ordered_json j;
  j["format"] = "csynth-manifest";
  j["command"] = command_;
  j["config_hash"] = config_hash_;
  j["created_at"] = utc_now();
  j["versions"] = {{"csynth", CSYNTH_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  j["info"] = info_;
  auto& files = j["files"] = nlohmann::ordered_json::array();
  for (const auto& e : entries_) files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"fnv1a64", e.checksum}});
  const auto tmp = dir_ / (std::string(kManifestName) + ".tmp");
  write_bytes(tmp, j.dump(2) + "\n");
  std::filesystem::rename(tmp, dir_ / kManifestName);
}

nlohmann::json load_manifest(const std::filesystem::path& dir) {
  try {
    return nlohmann::json::parse(read_file(dir / kManifestName));
  } catch (const nlohmann::json::exception& e) {
    throw DataError((dir / kManifestName).string() + ": " + e.what());
  }
}

}  // namespace csynth::cli

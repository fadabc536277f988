#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace quanta::manifest {

std::string sha256_hex(std::string_view bytes);
std::string now_iso8601_utc();

// Reproducibility record written next to every artifact. The content hash
// covers the tool version, resolved config, and seeds -- not timestamps -- so
// identical configurations hash identically across runs.
struct ExperimentManifest {
  std::string tool_version;
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::uint64_t> seeds;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;

  std::string content_hash() const;
  nlohmann::json to_json() const;
  static ExperimentManifest from_json(const nlohmann::json& j);

  void save(const std::string& path) const;
  static ExperimentManifest load(const std::string& path);
};

}  // namespace quanta::manifest

#include "quanta/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace quanta::manifest {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(),
                 nullptr) != 1)
    throw std::runtime_error("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string now_iso8601_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string ExperimentManifest::content_hash() const {
  nlohmann::json canonical;
  canonical["tool_version"] = tool_version;
  canonical["config"] = config;
  canonical["seeds"] = seeds;
  return sha256_hex(canonical.dump());
}

nlohmann::json ExperimentManifest::to_json() const {
  nlohmann::json j;
  j["tool_version"] = tool_version;
  j["command"] = command;
  j["config"] = config;
  j["seeds"] = seeds;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["content_hash"] = content_hash();
  j["outputs"] = outputs;
  return j;
}

ExperimentManifest ExperimentManifest::from_json(const nlohmann::json& j) {
  ExperimentManifest m;
  m.tool_version = j.at("tool_version").get<std::string>();
  m.command = j.value("command", "");
  m.config = j.at("config");
  if (j.contains("seeds"))
    m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  if (j.contains("outputs"))
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
  return m;
}

void ExperimentManifest::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string body = to_json().dump(2) + "\n";
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

ExperimentManifest ExperimentManifest::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  f >> j;
  return from_json(j);
}

}  // namespace quanta::manifest

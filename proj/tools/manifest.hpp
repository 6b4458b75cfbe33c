#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fragilis::cli {

inline constexpr const char* kToolVersion = "0.3.0";

struct InputDigest {
  std::string path;
  std::string sha256;

  friend bool operator==(const InputDigest&, const InputDigest&) = default;
};

// Provenance record written next to every command's outputs.
struct RunManifest {
  std::vector<std::string> command_line;
  std::vector<InputDigest> inputs;
  std::optional<std::uint64_t> seed;
  std::string tool_version = kToolVersion;
  std::string timestamp;  // UTC, ISO 8601

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);
std::string utc_timestamp();

}  // namespace fragilis::cli

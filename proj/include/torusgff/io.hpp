#pragma once

// Persistence: run manifests, report serialization helpers, file digests.
// Reals are written with 17 significant digits, '.' decimal, LF endings, so
// artifacts round-trip bit-faithfully.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace torusgff {

using ordered_json = nlohmann::ordered_json;

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string file_digest(const std::string& path) { return hex64(fnv1a64(read_file(path))); }

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

constexpr int kManifestSchemaVersion = 1;

struct RunManifest {
  std::string tool_version;
  std::string command_line;
  std::map<std::string, std::string> config;
  std::uint64_t master_seed = 0;
  std::vector<std::string> streams;  // "tag/index" labels in derivation order
  std::string started;
  std::string finished;
  std::map<std::string, std::string> output_digests;

  ordered_json to_json() const {
    ordered_json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["tool_version"] = tool_version;
    j["command_line"] = command_line;
    j["config"] = config;
    j["master_seed"] = master_seed;
    j["streams"] = streams;
    j["started"] = started;
    j["finished"] = finished;
    j["output_digests"] = output_digests;
    return j;
  }

  static RunManifest from_json(const ordered_json& j) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kManifestSchemaVersion)
      throw std::runtime_error("unsupported manifest schema version");
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command_line = j.at("command_line").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.streams = j.at("streams").get<std::vector<std::string>>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
    m.output_digests = j.at("output_digests").get<std::map<std::string, std::string>>();
    return m;
  }
};

inline void write_manifest(const RunManifest& m, const std::string& path) {
  write_file(path, m.to_json().dump(2) + "\n");
}

// parse errors surface nlohmann's message, which names the byte offset
inline RunManifest read_manifest(const std::string& path) {
  const std::string text = read_file(path);
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("manifest parse error in ") + path + ": " + e.what());
  }
  return RunManifest::from_json(j);
}

}  // namespace torusgff

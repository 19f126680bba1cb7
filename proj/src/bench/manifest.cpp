// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bench/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include "common/hash.hpp"
#include "common/io.hpp"

#ifndef PHOTONBENCH_VERSION
#define PHOTONBENCH_VERSION "0.0.0"
#endif

namespace photonbench {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string config_hash(const nlohmann::json& config) {
  // nlohmann::json (unlike ordered_json) stores object keys sorted.
  return hex64(fnv1a(nlohmann::json(config).dump()));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, const nlohmann::json& config)
    : command_(std::move(command)), config_(config), started_(utc_timestamp()) {}

nlohmann::ordered_json RunManifest::write(const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format"] = "photonbench-run-1";
  j["command"] = command_;
  j["version"] = PHOTONBENCH_VERSION;
  j["config_hash"] = config_hash(config_);
  j["config"] = config_;
  j["started"] = started_;
  j["finished"] = utc_timestamp();
  j["tasks"] = tasks_;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  const auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  for (const auto& f : files_) {
    const std::string bytes = read_text_file(f);
    nlohmann::ordered_json e;
    e["path"] = std::filesystem::relative(f, base).generic_string();
    e["bytes"] = bytes.size();
    e["fnv1a"] = hex64(fnv1a(bytes));
    files.push_back(std::move(e));
  }
  j["files"] = files;
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  write_file_atomic(path, j.dump(2) + "\n");
  return j;
}

}  // namespace photonbench

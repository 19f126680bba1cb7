// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace photonbench {

// Hex FNV-1a of the config serialized with sorted keys.
std::string config_hash(const nlohmann::json& config);

// UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

// Record of one command invocation: what was asked, when, what each task
// did and which files came out of it.
class RunManifest {
 public:
  RunManifest(std::string command, const nlohmann::json& config);

  void add_task(nlohmann::ordered_json task) { tasks_.push_back(std::move(task)); }
  void add_file(const std::filesystem::path& path) { files_.push_back(path); }
  void set(const std::string& key, nlohmann::ordered_json value) { extra_[key] = std::move(value); }

  // Stamps the end time, inventories files (size and FNV-1a of the bytes,
  // paths relative to the manifest's directory) and writes atomically.
  nlohmann::ordered_json write(const std::filesystem::path& path);

 private:
  std::string command_;
  nlohmann::json config_;
  std::string started_;
  std::vector<nlohmann::ordered_json> tasks_;
  std::vector<std::filesystem::path> files_;
  nlohmann::ordered_json extra_ = nlohmann::ordered_json::object();
};

}  // namespace photonbench

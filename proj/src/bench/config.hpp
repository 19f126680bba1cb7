// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace photonbench {

// TOML file as JSON (tables -> objects, arrays -> arrays). Throws ConfigError
// on syntax errors and IoError when the file cannot be read.
nlohmann::json load_toml(const std::filesystem::path& path);
nlohmann::json parse_toml(const std::string& text, const std::string& source);

// Recursively overlays `overrides` onto `base`; objects merge, other values
// replace.
void merge_config(nlohmann::json& base, const nlohmann::json& overrides);

// Typed view of one config table that remembers which keys were read, so
// leftovers can be rejected as unknown.
class ConfigSection {
 public:
  ConfigSection(const nlohmann::json* node, std::string path);

  bool has(const std::string& key) const;
  ConfigSection& section(const std::string& key);  // empty if absent

  double number(const std::string& key, std::optional<double> fallback = std::nullopt);
  std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt);
  bool boolean(const std::string& key, std::optional<bool> fallback = std::nullopt);
  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt);
  std::vector<std::string> strings(const std::string& key,
                                   std::optional<std::vector<std::string>> fallback = std::nullopt);
  std::optional<double> optional_number(const std::string& key);
  std::optional<std::int64_t> optional_integer(const std::string& key);
  std::optional<std::string> optional_string(const std::string& key);
  // Untyped value for parsers with their own validation.
  const nlohmann::json& raw(const std::string& key);

  // Throws ConfigError naming every key that was never read.
  void finish() const;

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json* value(const std::string& key);
  std::string where(const std::string& key) const;
  [[noreturn]] void type_error(const std::string& key, const char* expected) const;

  const nlohmann::json* node_;
  std::string path_;
  std::set<std::string> read_;
  std::vector<std::pair<std::string, std::unique_ptr<ConfigSection>>> children_;
};

}  // namespace photonbench

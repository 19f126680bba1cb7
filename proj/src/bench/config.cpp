// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bench/config.hpp"

#include <sstream>

#include <toml.hpp>

#include "common/error.hpp"
#include "common/io.hpp"

namespace photonbench {

namespace {

nlohmann::json to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = to_json(v);
    return j;
  }
  if (const auto* a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(to_json(v));
    return j;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  std::ostringstream where;
  where << node.source().begin;
  throw ConfigError("unsupported TOML value (dates and times are not used) at " + where.str());
}

}  // namespace

nlohmann::json parse_toml(const std::string& text, const std::string& source) {
  try {
    const toml::table t = toml::parse(text, source);
    return to_json(t);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ": " << e.description() << " (line " << e.source().begin.line << ", column "
        << e.source().begin.column << ")";
    throw ConfigError(msg.str());
  }
}

nlohmann::json load_toml(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
  return parse_toml(read_text_file(path), path.string());
}

void merge_config(nlohmann::json& base, const nlohmann::json& overrides) {
  if (!overrides.is_object() || !base.is_object()) {
    base = overrides;
    return;
  }
  for (const auto& [k, v] : overrides.items()) {
    if (v.is_object() && base.contains(k) && base[k].is_object()) merge_config(base[k], v);
    else base[k] = v;
  }
}

ConfigSection::ConfigSection(const nlohmann::json* node, std::string path)
    : node_(node), path_(std::move(path)) {
  if (node_ && !node_->is_null() && !node_->is_object())
    throw ConfigError("'" + path_ + "' must be a table");
}

std::string ConfigSection::where(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

void ConfigSection::type_error(const std::string& key, const char* expected) const {
  throw ConfigError("'" + where(key) + "' must be " + expected);
}

bool ConfigSection::has(const std::string& key) const {
  return node_ && node_->is_object() && node_->contains(key);
}

const nlohmann::json* ConfigSection::value(const std::string& key) {
  read_.insert(key);
  if (!has(key)) return nullptr;
  return &node_->at(key);
}

ConfigSection& ConfigSection::section(const std::string& key) {
  for (auto& [name, child] : children_)
    if (name == key) return *child;
  const nlohmann::json* v = value(key);
  children_.emplace_back(key, std::make_unique<ConfigSection>(v, where(key)));
  return *children_.back().second;
}

double ConfigSection::number(const std::string& key, std::optional<double> fallback) {
  const auto* v = value(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + where(key) + "'");
  }
  if (!v->is_number()) type_error(key, "a number");
  return v->get<double>();
}

std::int64_t ConfigSection::integer(const std::string& key, std::optional<std::int64_t> fallback) {
  const auto* v = value(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + where(key) + "'");
  }
  if (!v->is_number_integer()) type_error(key, "an integer");
  return v->get<std::int64_t>();
}

bool ConfigSection::boolean(const std::string& key, std::optional<bool> fallback) {
  const auto* v = value(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + where(key) + "'");
  }
  if (!v->is_boolean()) type_error(key, "true or false");
  return v->get<bool>();
}

std::string ConfigSection::string(const std::string& key, std::optional<std::string> fallback) {
  const auto* v = value(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + where(key) + "'");
  }
  if (!v->is_string()) type_error(key, "a string");
  return v->get<std::string>();
}

std::vector<std::string> ConfigSection::strings(const std::string& key,
                                                std::optional<std::vector<std::string>> fallback) {
  const auto* v = value(key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + where(key) + "'");
  }
  if (v->is_string()) return {v->get<std::string>()};
  if (!v->is_array()) type_error(key, "a list of strings");
  std::vector<std::string> out;
  for (const auto& e : *v) {
    if (!e.is_string()) type_error(key, "a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::optional<double> ConfigSection::optional_number(const std::string& key) {
  if (!has(key)) {
    read_.insert(key);
    return std::nullopt;
  }
  return number(key);
}

std::optional<std::int64_t> ConfigSection::optional_integer(const std::string& key) {
  if (!has(key)) {
    read_.insert(key);
    return std::nullopt;
  }
  return integer(key);
}

std::optional<std::string> ConfigSection::optional_string(const std::string& key) {
  if (!has(key)) {
    read_.insert(key);
    return std::nullopt;
  }
  return string(key);
}

const nlohmann::json& ConfigSection::raw(const std::string& key) {
  static const nlohmann::json null_value;
  const auto* v = value(key);
  return v ? *v : null_value;
}

void ConfigSection::finish() const {
  if (node_ && node_->is_object()) {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : node_->items()) {
      (void)v;
      if (!read_.count(k)) unknown.push_back(where(k));
    }
    if (!unknown.empty()) {
      std::string msg = "unknown config key";
      msg += unknown.size() > 1 ? "s: " : ": ";
      for (std::size_t i = 0; i < unknown.size(); ++i) msg += (i ? ", '" : "'") + unknown[i] + "'";
      throw ConfigError(msg);
    }
  }
  for (const auto& [name, child] : children_) child->finish();
}

}  // namespace photonbench

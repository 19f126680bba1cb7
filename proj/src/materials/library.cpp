// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "materials/library.hpp"

#include <cstdlib>

#include "common/error.hpp"

namespace photonbench {

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PHOTONBENCH_DATA_DIR"); env && *env) return env;
  return PHOTONBENCH_DEFAULT_DATA_DIR;
}

const DispersiveMaterial& MaterialLibrary::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(name); it != cache_.end()) return it->second;
  if (name == "Air" || name == "vacuum") {
    auto m = vacuum_material();
    m.name = name;
    return cache_.emplace(name, m).first->second;
  }
  const auto path = dir_ / (name + ".json");
  if (!std::filesystem::exists(path))
    throw InvalidArgument("unknown material '" + name + "' (no " + path.string() + ")");
  auto m = load_material(path);
  m.name = name;
  return cache_.emplace(name, std::move(m)).first->second;
}

void MaterialLibrary::add(DispersiveMaterial material) {
  validate_terms(material);
  std::lock_guard lock(mu_);
  cache_.insert_or_assign(material.name, std::move(material));
}

bool MaterialLibrary::contains(const std::string& name) const {
  {
    std::lock_guard lock(mu_);
    if (cache_.count(name)) return true;
  }
  return name == "Air" || name == "vacuum" || std::filesystem::exists(dir_ / (name + ".json"));
}

const std::vector<std::string>& block_material_names() {
  static const std::vector<std::string> names = {"Ag",   "Air",        "Au",   "AZO",
                                                 "cSi",  "CH3NH3PbI3", "Cu",   "GaAs",
                                                 "ITO",  "Ni",         "TiO2", "ZnO"};
  return names;
}

}  // namespace photonbench

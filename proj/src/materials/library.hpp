// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "materials/material.hpp"

namespace photonbench {

// Root of the shipped data tree: $PHOTONBENCH_DATA_DIR when set, otherwise the
// directory configured at build time.
std::filesystem::path default_data_dir();

// Name -> fitted material lookup backed by `<dir>/<name>.json`. "Air" (and
// "vacuum") resolve to the builtin vacuum without touching the filesystem.
// Materials can also be registered in memory, which tests use for synthetic media.
class MaterialLibrary {
 public:
  MaterialLibrary() : MaterialLibrary(default_data_dir() / "fitted") {}
  explicit MaterialLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const DispersiveMaterial& get(const std::string& name) const;
  void add(DispersiveMaterial material);
  bool contains(const std::string& name) const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  mutable std::map<std::string, DispersiveMaterial> cache_;
};

// Material names accepted by the combinatorial block structure, in encoding order.
const std::vector<std::string>& block_material_names();

}  // namespace photonbench

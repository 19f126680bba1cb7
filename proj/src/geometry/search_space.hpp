// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geometry/structure.hpp"

namespace photonbench {

struct ParamRange {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  double increment = 1.0;

  std::uint64_t count() const;
  double value(std::uint64_t k) const { return lower + static_cast<double>(k) * increment; }
};

// Discretized design space. Points are ordered lexicographically with the
// material combination most significant, then parameters in declaration order
// (the last parameter varies fastest).
struct SearchSpace {
  Variant variant = Variant::ThreeLayerFilm;
  std::vector<ParamRange> params;
  // Per material slot: candidate list. With `material_cross_product` off only
  // `fixed_materials` is used.
  std::vector<std::vector<std::string>> slot_choices;
  std::vector<std::string> fixed_materials;
  bool material_cross_product = false;

  std::uint64_t parameter_count() const;
  std::uint64_t material_combinations() const;
  std::uint64_t count() const { return parameter_count() * material_combinations(); }

  StructureSpec at(std::uint64_t index) const;
  std::vector<std::string> materials_at(std::uint64_t combo) const;
  // Index of the grid point nearest to `x` (parameter order, nm); ties go to the lower index.
  std::uint64_t nearest_index(const std::vector<double>& x, std::uint64_t combo = 0) const;
  std::vector<double> point(std::uint64_t index) const;  // parameter values only
};

// Search space of a variant at the published discretization.
SearchSpace default_search_space(Variant v);
void validate_search_space(const SearchSpace& space);

nlohmann::ordered_json search_space_to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const nlohmann::json& j);

// Block grids: 80 material indices into block_material_names(), encoded as a
// base-12 string using digits 0-9, a, b.
std::string blocks_encode(const std::vector<int>& blocks);
StructureSpec blocks_decode(const std::string& code);
StructureSpec blocks_from_names(const std::vector<std::string>& names);

}  // namespace photonbench

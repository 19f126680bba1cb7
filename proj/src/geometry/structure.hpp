// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace photonbench {

enum class Variant {
  ThreeLayerFilm,
  AntiReflectiveNanocones,
  VerticalNanowires,
  ClosePackedNanospheres,
  FilmWithDoubleNanocones,
  CombinatorialBlocks,
};

inline constexpr int kBlockColumns = 20;  // p / q
inline constexpr int kBlockRows = 4;      // t / q
inline constexpr int kBlockCount = kBlockColumns * kBlockRows;
inline constexpr double kBlockPitch = 200.0;
inline constexpr double kBlockThickness = 40.0;
inline constexpr double kBlockSize = 10.0;
inline constexpr double kDefaultUnitDepth = 50.0;

std::string variant_name(Variant v);
// Accepts the snake_case names produced by variant_name() and the CamelCase enum spelling.
Variant parse_variant(const std::string& name);
const std::vector<Variant>& all_variants();

// Per-variant geometric parameter names, in canonical order.
const std::vector<std::string>& parameter_names(Variant v);

struct ParameterBound {
  double lower;
  double upper;
};
ParameterBound parameter_bound(Variant v, const std::string& name);

// Material slots of a variant: slot name and the allowed materials. Slots with
// a single choice are fixed by the structure definition.
struct MaterialSlot {
  std::string name;
  std::vector<std::string> choices;
};
const std::vector<MaterialSlot>& material_slots(Variant v);
std::vector<std::string> default_materials(Variant v);

struct StructureSpec {
  Variant variant = Variant::ThreeLayerFilm;
  std::map<std::string, double> params;  // nm
  std::vector<std::string> materials;    // one per slot; empty means defaults
  std::vector<int> blocks;               // CombinatorialBlocks only, row-major from the top

  double param(const std::string& name) const;
  bool operator==(const StructureSpec&) const = default;
};

// Lists every violated bound; empty when the spec is valid.
std::vector<std::string> validation_errors(const StructureSpec& spec);
// Same checks restricted to geometry, for structures built with custom materials.
std::vector<std::string> parameter_errors(const StructureSpec& spec);
// Returns the spec with default materials filled in; throws InvalidArgument
// carrying every violation otherwise.
StructureSpec validate(const StructureSpec& spec);

nlohmann::ordered_json structure_to_json(const StructureSpec& spec);
StructureSpec structure_from_json(const nlohmann::json& j);

struct SimulationCell {
  double width = 0.0;   // nm, periodic direction
  double height = 0.0;  // nm, including both PML slabs
  double unit_depth = kDefaultUnitDepth;

  double pml_depth() const { return unit_depth; }
  double source_y() const { return 1.5 * unit_depth; }
  double reflection_monitor_y() const { return 2.5 * unit_depth; }
  double structure_top() const { return 3.0 * unit_depth; }
  double structure_height() const { return height - 6.0 * unit_depth; }
  double transmission_monitor_y() const { return height - 2.0 * unit_depth; }
  bool operator==(const SimulationCell&) const = default;
};

// 2D cell dimensions of a structure; y grows downward from the top of the cell.
SimulationCell cell_size(const StructureSpec& spec, double unit_depth = kDefaultUnitDepth);

}  // namespace photonbench

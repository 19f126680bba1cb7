// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "geometry/structure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/error.hpp"
#include "common/io.hpp"
#include "materials/library.hpp"

namespace photonbench {

namespace {

struct VariantInfo {
  Variant variant;
  const char* name;
  const char* camel;
  std::vector<std::string> params;
  std::vector<ParameterBound> bounds;
  std::vector<MaterialSlot> slots;
  std::vector<std::string> defaults;
};

const std::vector<std::string> kTransparent = {"AZO", "cSi", "ITO", "TiO2", "ZnO"};
const std::vector<std::string> kMetals = {"Ag", "Au", "Cu", "Ni"};
const std::vector<std::string> kAbsorbers = {"cSi", "CH3NH3PbI3", "GaAs"};

const std::vector<VariantInfo>& table() {
  static const std::vector<VariantInfo> info = {
      {Variant::ThreeLayerFilm, "three_layer_film", "ThreeLayerFilm",
       {"t1", "t2", "t3"}, {{10, 100}, {3, 20}, {10, 100}},
       {{"outer", kTransparent}, {"metal", kMetals}}, {"TiO2", "Ag"}},
      {Variant::AntiReflectiveNanocones, "nanocones", "AntiReflectiveNanocones",
       {"r", "h"}, {{5, 150}, {1, 300}},
       {{"glass", {"FusedSilica"}}}, {"FusedSilica"}},
      {Variant::VerticalNanowires, "nanowires", "VerticalNanowires",
       {"g", "r", "h"}, {{1, 200}, {5, 200}, {200, 200}},
       {{"wire", kAbsorbers}}, {"cSi"}},
      {Variant::ClosePackedNanospheres, "nanospheres", "ClosePackedNanospheres",
       {"t", "r"}, {{100, 400}, {10, 200}},
       {{"film", kAbsorbers}, {"sphere", {"TiO2"}}}, {"cSi", "TiO2"}},
      {Variant::FilmWithDoubleNanocones, "film_double_nanocones", "FilmWithDoubleNanocones",
       {"t1", "t2", "t3", "r1", "h1", "r2", "h2"},
       {{10, 50}, {3, 20}, {10, 50}, {20, 50}, {50, 100}, {20, 50}, {50, 100}},
       {{"outer", kTransparent}, {"metal", kMetals}, {"cone_top", kTransparent},
        {"cone_bottom", kTransparent}},
       {"TiO2", "Ag", "TiO2", "TiO2"}},
      {Variant::CombinatorialBlocks, "material_blocks", "CombinatorialBlocks", {}, {}, {}, {}},
  };
  return info;
}

const VariantInfo& info(Variant v) {
  for (const auto& i : table())
    if (i.variant == v) return i;
  throw InvalidArgument("unknown structure variant");
}

}  // namespace

std::string variant_name(Variant v) { return info(v).name; }

Variant parse_variant(const std::string& name) {
  for (const auto& i : table())
    if (name == i.name || name == i.camel) return i.variant;
  throw InvalidArgument("unknown structure variant '" + name + "'");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = {
      Variant::ThreeLayerFilm,          Variant::AntiReflectiveNanocones,
      Variant::VerticalNanowires,       Variant::ClosePackedNanospheres,
      Variant::FilmWithDoubleNanocones, Variant::CombinatorialBlocks};
  return v;
}

const std::vector<std::string>& parameter_names(Variant v) { return info(v).params; }

ParameterBound parameter_bound(Variant v, const std::string& name) {
  const auto& i = info(v);
  for (std::size_t k = 0; k < i.params.size(); ++k)
    if (i.params[k] == name) return i.bounds[k];
  throw InvalidArgument("structure " + variant_name(v) + " has no parameter '" + name + "'");
}

const std::vector<MaterialSlot>& material_slots(Variant v) { return info(v).slots; }
std::vector<std::string> default_materials(Variant v) { return info(v).defaults; }

double StructureSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end())
    throw InvalidArgument("structure " + variant_name(variant) + " is missing parameter '" +
                          name + "'");
  return it->second;
}

std::vector<std::string> parameter_errors(const StructureSpec& spec) {
  std::vector<std::string> errors;
  const auto& i = info(spec.variant);
  for (std::size_t k = 0; k < i.params.size(); ++k) {
    const auto& name = i.params[k];
    auto it = spec.params.find(name);
    if (it == spec.params.end()) {
      errors.push_back("missing parameter " + name);
      continue;
    }
    const double v = it->second;
    if (!std::isfinite(v)) {
      errors.push_back(name + " is not finite");
      continue;
    }
    if (spec.variant == Variant::VerticalNanowires && name == "g" && v < 0)
      errors.push_back("g = " + format_double(v) + " is negative (2r must not exceed the pitch)");
    if (v < i.bounds[k].lower)
      errors.push_back(name + " = " + format_double(v) + " below lower bound " +
                       format_double(i.bounds[k].lower));
    if (v > i.bounds[k].upper)
      errors.push_back(name + " = " + format_double(v) + " above upper bound " +
                       format_double(i.bounds[k].upper));
  }
  for (const auto& [name, value] : spec.params) {
    (void)value;
    if (std::find(i.params.begin(), i.params.end(), name) == i.params.end())
      errors.push_back("unknown parameter " + name + " for " + i.name);
  }
  if (spec.variant == Variant::CombinatorialBlocks) {
    if (spec.blocks.size() != static_cast<std::size_t>(kBlockCount))
      errors.push_back("blocks grid has " + std::to_string(spec.blocks.size()) +
                       " entries, expected " + std::to_string(kBlockCount));
    const int n = static_cast<int>(block_material_names().size());
    for (std::size_t k = 0; k < spec.blocks.size(); ++k)
      if (spec.blocks[k] < 0 || spec.blocks[k] >= n)
        errors.push_back("block " + std::to_string(k) + " has unknown material id " +
                         std::to_string(spec.blocks[k]));
  } else if (!spec.blocks.empty()) {
    errors.push_back("blocks are only valid for material_blocks structures");
  }
  return errors;
}

std::vector<std::string> validation_errors(const StructureSpec& spec) {
  auto errors = parameter_errors(spec);
  const auto& slots = info(spec.variant).slots;
  if (!spec.materials.empty()) {
    if (spec.materials.size() != slots.size()) {
      errors.push_back("expected " + std::to_string(slots.size()) + " materials, got " +
                       std::to_string(spec.materials.size()));
    } else {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        const auto& c = slots[s].choices;
        if (std::find(c.begin(), c.end(), spec.materials[s]) == c.end())
          errors.push_back("material '" + spec.materials[s] + "' not allowed in slot " +
                           slots[s].name);
      }
    }
  }
  return errors;
}

StructureSpec validate(const StructureSpec& spec) {
  const auto errors = validation_errors(spec);
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid " << variant_name(spec.variant) << " structure: ";
    for (std::size_t k = 0; k < errors.size(); ++k) os << (k ? "; " : "") << errors[k];
    throw InvalidArgument(os.str());
  }
  StructureSpec out = spec;
  if (out.materials.empty()) out.materials = default_materials(spec.variant);
  return out;
}

nlohmann::ordered_json structure_to_json(const StructureSpec& spec) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(spec.variant);
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& name : parameter_names(spec.variant))
    if (auto it = spec.params.find(name); it != spec.params.end()) params[name] = it->second;
  j["params"] = params;
  j["materials"] = spec.materials.empty() ? default_materials(spec.variant) : spec.materials;
  if (spec.variant == Variant::CombinatorialBlocks) {
    std::string code;
    for (int b : spec.blocks) code.push_back(b < 10 ? char('0' + b) : char('a' + b - 10));
    j["blocks"] = code;
  }
  return j;
}

StructureSpec structure_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("structure must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "variant" && key != "params" && key != "materials" && key != "blocks")
      throw InvalidArgument("unknown structure key '" + key + "'");
  }
  StructureSpec spec;
  try {
    spec.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("params"))
      for (const auto& [k, v] : j["params"].items()) spec.params[k] = v.get<double>();
    if (j.contains("materials")) spec.materials = j["materials"].get<std::vector<std::string>>();
    if (j.contains("blocks")) {
      const auto& b = j["blocks"];
      if (b.is_string()) {
        for (char c : b.get<std::string>()) {
          if (c >= '0' && c <= '9') spec.blocks.push_back(c - '0');
          else if (c >= 'a' && c <= 'b') spec.blocks.push_back(c - 'a' + 10);
          else throw InvalidArgument(std::string("invalid block code character '") + c + "'");
        }
      } else {
        for (const auto& e : b) {
          if (e.is_string()) {
            const auto& names = block_material_names();
            auto it = std::find(names.begin(), names.end(), e.get<std::string>());
            if (it == names.end())
              throw InvalidArgument("unknown block material '" + e.get<std::string>() + "'");
            spec.blocks.push_back(static_cast<int>(it - names.begin()));
          } else {
            spec.blocks.push_back(e.get<int>());
          }
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed structure JSON: ") + e.what());
  }
  return spec;
}

SimulationCell cell_size(const StructureSpec& spec, double m) {
  if (!(m > 0)) throw InvalidArgument("unit depth must be positive");
  SimulationCell c;
  c.unit_depth = m;
  const auto p = [&](const char* n) { return spec.param(n); };
  switch (spec.variant) {
    case Variant::ThreeLayerFilm:
      c.width = 10.0;
      c.height = p("t2") + std::max(2 * p("t1"), 2 * p("t3")) + 6 * m;
      break;
    case Variant::AntiReflectiveNanocones:
      c.width = 2 * p("r");
      c.height = 2 * p("h") + 6 * m;
      break;
    case Variant::VerticalNanowires:
      c.width = 2 * p("r") + p("g");
      c.height = p("h") + 6 * m;
      break;
    case Variant::ClosePackedNanospheres:
      c.width = 2 * p("r");
      c.height = std::max(4 * p("r"), 2 * p("t")) + 6 * m;
      break;
    case Variant::FilmWithDoubleNanocones:
      c.width = std::max(2 * p("r1"), 2 * p("r2"));
      c.height = p("t2") + std::max(2 * p("t1"), 2 * p("t3")) +
                 std::max(2 * p("h1"), 2 * p("h2")) + 6 * m;
      break;
    case Variant::CombinatorialBlocks:
      c.width = kBlockPitch;
      c.height = kBlockThickness + 6 * m;
      break;
  }
  return c;
}

}  // namespace photonbench

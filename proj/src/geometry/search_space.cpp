// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "geometry/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "common/error.hpp"
#include "common/io.hpp"
#include "materials/library.hpp"

namespace photonbench {

std::uint64_t ParamRange::count() const {
  return static_cast<std::uint64_t>(std::floor((upper - lower) / increment + 1e-9)) + 1;
}

std::uint64_t SearchSpace::parameter_count() const {
  std::uint64_t n = 1;
  for (const auto& p : params) n *= p.count();
  return n;
}

std::uint64_t SearchSpace::material_combinations() const {
  if (!material_cross_product) return 1;
  std::uint64_t n = 1;
  for (const auto& c : slot_choices) n *= c.size();
  return n;
}

std::vector<std::string> SearchSpace::materials_at(std::uint64_t combo) const {
  if (!material_cross_product) return fixed_materials;
  std::vector<std::string> out(slot_choices.size());
  for (std::size_t s = slot_choices.size(); s-- > 0;) {
    const auto n = slot_choices[s].size();
    out[s] = slot_choices[s][combo % n];
    combo /= n;
  }
  return out;
}

std::vector<double> SearchSpace::point(std::uint64_t index) const {
  std::uint64_t rem = index % parameter_count();
  std::vector<double> x(params.size());
  for (std::size_t k = params.size(); k-- > 0;) {
    const auto n = params[k].count();
    x[k] = params[k].value(rem % n);
    rem /= n;
  }
  return x;
}

StructureSpec SearchSpace::at(std::uint64_t index) const {
  if (index >= count())
    throw InvalidArgument("search-space index " + std::to_string(index) + " out of range (" +
                          std::to_string(count()) + " points)");
  StructureSpec spec;
  spec.variant = variant;
  const auto x = point(index);
  for (std::size_t k = 0; k < params.size(); ++k) spec.params[params[k].name] = x[k];
  spec.materials = materials_at(index / parameter_count());
  return spec;
}

std::uint64_t SearchSpace::nearest_index(const std::vector<double>& x, std::uint64_t combo) const {
  if (x.size() != params.size())
    throw InvalidArgument("expected " + std::to_string(params.size()) + " coordinates, got " +
                          std::to_string(x.size()));
  std::uint64_t index = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto n = params[k].count();
    const double u = (x[k] - params[k].lower) / params[k].increment;
    double kk = std::ceil(u - 0.5);
    kk = std::clamp(kk, 0.0, static_cast<double>(n - 1));
    index = index * n + static_cast<std::uint64_t>(kk);
  }
  return combo * parameter_count() + index;
}

SearchSpace default_search_space(Variant v) {
  if (v == Variant::CombinatorialBlocks)
    throw InvalidArgument("the material-block space is combinatorial and cannot be enumerated");
  SearchSpace s;
  s.variant = v;
  const double inc = v == Variant::FilmWithDoubleNanocones ? 5.0 : 1.0;
  for (const auto& name : parameter_names(v)) {
    const auto b = parameter_bound(v, name);
    s.params.push_back({name, b.lower, b.upper, inc});
  }
  for (const auto& slot : material_slots(v)) s.slot_choices.push_back(slot.choices);
  s.fixed_materials = default_materials(v);
  return s;
}

void validate_search_space(const SearchSpace& s) {
  const auto& names = parameter_names(s.variant);
  if (s.params.size() != names.size())
    throw InvalidArgument("search space for " + variant_name(s.variant) + " needs " +
                          std::to_string(names.size()) + " parameters");
  for (std::size_t k = 0; k < s.params.size(); ++k) {
    const auto& p = s.params[k];
    if (p.name != names[k])
      throw InvalidArgument("search-space parameter " + std::to_string(k) + " must be " +
                            names[k] + ", got " + p.name);
    if (!(p.increment > 0)) throw InvalidArgument("increment of " + p.name + " must be positive");
    if (!(p.lower <= p.upper)) throw InvalidArgument("lower bound of " + p.name + " exceeds upper");
    const auto b = parameter_bound(s.variant, p.name);
    if (p.lower < b.lower || p.upper > b.upper)
      throw InvalidArgument("range of " + p.name + " leaves [" + format_double(b.lower) + ", " +
                            format_double(b.upper) + "]");
  }
  if (s.fixed_materials.size() != material_slots(s.variant).size())
    throw InvalidArgument("search space needs one fixed material per slot");
  StructureSpec probe;
  probe.variant = s.variant;
  for (const auto& p : s.params) probe.params[p.name] = p.lower;
  probe.materials = s.fixed_materials;
  validate(probe);
}

nlohmann::ordered_json search_space_to_json(const SearchSpace& s) {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(s.variant);
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& p : s.params)
    params[p.name] = {{"lower", p.lower}, {"upper", p.upper}, {"increment", p.increment}};
  j["params"] = params;
  j["materials"] = s.fixed_materials;
  j["material_cross_product"] = s.material_cross_product;
  return j;
}

SearchSpace search_space_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("search space must be a table");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (key != "variant" && key != "params" && key != "materials" &&
        key != "material_cross_product")
      throw ConfigError("unknown search-space key '" + key + "'");
  }
  SearchSpace s;
  try {
    s = default_search_space(parse_variant(j.at("variant").get<std::string>()));
    if (j.contains("params")) {
      for (const auto& [name, spec] : j["params"].items()) {
        auto it = std::find_if(s.params.begin(), s.params.end(),
                               [&](const ParamRange& p) { return p.name == name; });
        if (it == s.params.end())
          throw ConfigError("unknown parameter '" + name + "' for " + variant_name(s.variant));
        for (const auto& [key, value] : spec.items()) {
          if (key == "lower") it->lower = value.get<double>();
          else if (key == "upper") it->upper = value.get<double>();
          else if (key == "increment") it->increment = value.get<double>();
          else if (key == "value") it->lower = it->upper = value.get<double>();
          else throw ConfigError("unknown key '" + key + "' in parameter " + name);
        }
      }
    }
    if (j.contains("materials")) s.fixed_materials = j["materials"].get<std::vector<std::string>>();
    s.material_cross_product = j.value("material_cross_product", false);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed search space: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  try {
    validate_search_space(s);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

std::string blocks_encode(const std::vector<int>& blocks) {
  if (blocks.size() != static_cast<std::size_t>(kBlockCount))
    throw InvalidArgument("blocks grid must have " + std::to_string(kBlockCount) + " entries");
  std::string code;
  code.reserve(blocks.size());
  for (int b : blocks) {
    if (b < 0 || b >= 12) throw InvalidArgument("unknown block material id " + std::to_string(b));
    code.push_back(b < 10 ? static_cast<char>('0' + b) : static_cast<char>('a' + b - 10));
  }
  return code;
}

StructureSpec blocks_decode(const std::string& code) {
  if (code.size() != static_cast<std::size_t>(kBlockCount))
    throw InvalidArgument("block code must have " + std::to_string(kBlockCount) +
                          " characters, got " + std::to_string(code.size()));
  StructureSpec spec;
  spec.variant = Variant::CombinatorialBlocks;
  for (char c : code) {
    if (c >= '0' && c <= '9') spec.blocks.push_back(c - '0');
    else if (c == 'a' || c == 'b') spec.blocks.push_back(c - 'a' + 10);
    else throw InvalidArgument(std::string("invalid block code character '") + c + "'");
  }
  return spec;
}

StructureSpec blocks_from_names(const std::vector<std::string>& names) {
  const auto& all = block_material_names();
  std::vector<int> ids;
  for (const auto& n : names) {
    auto it = std::find(all.begin(), all.end(), n);
    if (it == all.end()) throw InvalidArgument("unknown block material '" + n + "'");
    ids.push_back(static_cast<int>(it - all.begin()));
  }
  return blocks_decode(blocks_encode(ids));
}

}  // namespace photonbench

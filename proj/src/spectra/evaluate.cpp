// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spectra/evaluate.hpp"

#include "common/error.hpp"
#include "geometry/raster.hpp"

namespace photonbench {

namespace {

const std::string& slot_material(const StructureSpec& spec, std::size_t slot) {
  static const std::vector<std::string> none;
  const auto& mats = spec.materials;
  if (slot < mats.size()) return mats[slot];
  static thread_local std::vector<std::string> defaults;
  defaults = default_materials(spec.variant);
  if (slot < defaults.size()) return defaults[slot];
  throw InvalidArgument("structure " + variant_name(spec.variant) + " has no material slot " +
                        std::to_string(slot));
}

}  // namespace

double structure_band_gap(const StructureSpec& spec, const EvaluationContext& ctx) {
  if (ctx.band_gap_ev) return *ctx.band_gap_ev;
  if (ctx.ignore_band_gap || spec.variant == Variant::CombinatorialBlocks) {
    if (!ctx.am15) throw InvalidArgument("solar objectives need an AM1.5 table");
    return ctx.am15->min_energy();
  }
  const std::string name = slot_material(spec, 0);
  const auto& m = ctx.library->get(name);
  if (!m.band_gap_ev)
    throw InvalidArgument("material " + name + " has no band gap; set one explicitly");
  return *m.band_gap_ev;
}

double structure_resistivity(const StructureSpec& spec, const EvaluationContext& ctx) {
  if (spec.variant != Variant::ThreeLayerFilm && spec.variant != Variant::FilmWithDoubleNanocones)
    throw InvalidArgument("shielding effectiveness is defined for metal films only");
  const std::string name = slot_material(spec, 1);
  if (auto it = ctx.resistivity.find(name); it != ctx.resistivity.end()) return it->second;
  const auto& m = ctx.library->get(name);
  if (!m.resistivity_ohm_m)
    throw InvalidArgument("material " + name + " has no resistivity; set one explicitly");
  return *m.resistivity_ohm_m;
}

double objective_from_spectra(ObjectiveKind kind, const RatSpectra& s, const StructureSpec& spec,
                              const EvaluationContext& ctx) {
  const auto need = [](const SpectralWeight* w, const char* what) -> const SpectralWeight& {
    if (!w) throw InvalidArgument(std::string("objective needs a ") + what + " table");
    return *w;
  };
  switch (kind) {
    case ObjectiveKind::Transmittance550: return transmittance_550(s);
    case ObjectiveKind::VisibleTransmission: return visible_transmission(s, need(ctx.d65, "D65"));
    case ObjectiveKind::SolarReflection: return solar_reflection(s, need(ctx.am15, "AM1.5"));
    case ObjectiveKind::SolarAbsorption:
      return solar_absorption(s, need(ctx.am15, "AM1.5"), structure_band_gap(spec, ctx));
    case ObjectiveKind::UltimateEfficiency:
      return ultimate_efficiency(s, need(ctx.am15, "AM1.5"), structure_band_gap(spec, ctx));
    case ObjectiveKind::ShieldingEffectiveness:
      return shielding_effectiveness(spec.param("t2"), structure_resistivity(spec, ctx));
  }
  throw InvalidArgument("unknown objective");
}

Evaluation evaluate_structure(ObjectiveKind kind, const StructureSpec& spec,
                              const EvaluationContext& ctx) {
  Evaluation ev;
  if (kind == ObjectiveKind::ShieldingEffectiveness) {
    ev.value = shielding_effectiveness(spec.param("t2"), structure_resistivity(spec, ctx));
    return ev;
  }
  if (!ctx.library) throw InvalidArgument("evaluation needs a material library");
  const auto wl = band_wavelengths(objective_band(kind), ctx.points);
  auto result = simulate_layout(layout(spec, kDefaultUnitDepth), *ctx.library, wl, ctx.run, ctx.cache);
  ev.value = objective_from_spectra(kind, result.spectra, spec, ctx);
  ev.steps = result.steps;
  ev.warnings = std::move(result.warnings);
  ev.spectra = std::move(result.spectra);
  return ev;
}

}  // namespace photonbench

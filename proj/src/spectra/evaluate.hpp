// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>

#include "geometry/structure.hpp"
#include "spectra/objectives.hpp"

namespace photonbench {

struct EvaluationContext {
  const MaterialLibrary* library = nullptr;
  const SpectralWeight* am15 = nullptr;
  const SpectralWeight* d65 = nullptr;
  RunConfig run;
  NormalizationCache* cache = nullptr;
  int points = 64;
  // Overrides of the metal resistivity stored with each fitted material.
  std::map<std::string, double> resistivity;
  std::optional<double> band_gap_ev;  // overrides the absorber's band gap
  bool ignore_band_gap = false;       // count every photon in the solar integrals
};

// Band gap used for a structure's solar integrals: the absorber slot's material.
double structure_band_gap(const StructureSpec& spec, const EvaluationContext& ctx);
double structure_resistivity(const StructureSpec& spec, const EvaluationContext& ctx);

// Objective of a finished spectrum (shielding needs the structure, not the spectrum).
double objective_from_spectra(ObjectiveKind kind, const RatSpectra& s, const StructureSpec& spec,
                              const EvaluationContext& ctx);

struct Evaluation {
  double value = 0.0;
  std::optional<RatSpectra> spectra;
  std::int64_t steps = 0;
  std::vector<std::string> warnings;
};

// Simulates the structure when the objective needs a spectrum.
Evaluation evaluate_structure(ObjectiveKind kind, const StructureSpec& spec,
                              const EvaluationContext& ctx);

}  // namespace photonbench

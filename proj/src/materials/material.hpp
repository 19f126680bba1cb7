// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace photonbench {

// One resonance of the susceptibility, eps += sigma * omega^2 / (omega^2 - w^2 - i w gamma).
// Frequencies are angular, in internal units (2*pi*c/a with a = 1 um). A Drude
// term is a Lorentz term pinned at kDrudeOmega and flagged, so sigma*omega^2
// plays the role of the squared plasma frequency.
struct LorentzTerm {
  double sigma = 0.0;
  double omega = 1.0;
  double gamma = 0.0;
  bool drude = false;

  bool operator==(const LorentzTerm&) const = default;
};

inline constexpr double kDrudeOmega = 1e-3;

struct DispersiveMaterial {
  std::string name;
  double eps_inf = 1.0;
  std::vector<LorentzTerm> terms;
  std::optional<double> band_gap_ev;
  std::optional<double> resistivity_ohm_m;
  double extinction_offset = 0.0;
  double fit_min_nm = 280.0;
  double fit_max_nm = 2500.0;
  double residual = 0.0;

  bool dispersive() const { return !terms.empty(); }
  bool operator==(const DispersiveMaterial&) const = default;
};

DispersiveMaterial vacuum_material();

// Complex relative permittivity at angular frequency `omega` (internal units),
// sign convention exp(-i w t) so that absorption has Im(eps) > 0.
std::complex<double> permittivity(const DispersiveMaterial& material, double omega);

// True when `omega` lies outside the material's declared fit range.
bool is_extrapolation(const DispersiveMaterial& material, double omega);

// Throws InvalidArgument when a term violates sigma >= 0, gamma >= 0, omega > 0.
void validate_terms(const DispersiveMaterial& material);

nlohmann::ordered_json material_to_json(const DispersiveMaterial& material);
DispersiveMaterial material_from_json(const nlohmann::json& j);

DispersiveMaterial load_material(const std::filesystem::path& path);
void save_material(const std::filesystem::path& path, const DispersiveMaterial& material);

}  // namespace photonbench

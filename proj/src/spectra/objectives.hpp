// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spectra/rat.hpp"
#include "spectra/spectral_weight.hpp"

namespace photonbench {

enum class ObjectiveKind {
  Transmittance550,
  VisibleTransmission,
  SolarReflection,
  SolarAbsorption,
  UltimateEfficiency,
  ShieldingEffectiveness,
};

std::string objective_name(ObjectiveKind k);
ObjectiveKind parse_objective(const std::string& s);
// Spectral band an objective is evaluated on (shielding needs none and returns Single550).
Band objective_band(ObjectiveKind k);
bool objective_maximized(ObjectiveKind k);
std::string objective_units(ObjectiveKind k);

struct ObjectiveValue {
  ObjectiveKind kind;
  double value = 0.0;
  std::string units;
};

// Trapezoid rule of f(x) * w(x) on the sorted union of both grids restricted to
// [lo, hi], with linear interpolation of each factor.
double weighted_integral(const std::vector<double>& fx, const std::vector<double>& fy,
                         const std::vector<double>& wx, const std::vector<double>& wy, double lo,
                         double hi);

// Photon-flux weighted mean of R over the spectrum's wavelength range.
double solar_reflection(const RatSpectra& s, const SpectralWeight& am15);
// Energy integrals: numerators over E > band_gap_ev, denominators over the
// spectrum's energy range. Throws when the band gap lies outside the weight table.
double solar_absorption(const RatSpectra& s, const SpectralWeight& am15, double band_gap_ev);
double ultimate_efficiency(const RatSpectra& s, const SpectralWeight& am15, double band_gap_ev);
// D65-weighted mean of T over [380, 750] nm.
double visible_transmission(const RatSpectra& s, const SpectralWeight& d65);
double transmittance_550(const RatSpectra& s);

// S = 20 log10(1 + eta0 t2 / (2 rho)), t2 in nm, rho in ohm m.
double shielding_effectiveness(double t2_nm, double rho_ohm_m);

// Integration cutoff wavelength (nm) for a band gap.
double band_gap_cutoff_nm(double band_gap_ev);

// Non-dominated subset under maximization of both coordinates, in input order.
std::vector<std::size_t> pareto_filter(const std::vector<std::pair<double, double>>& points);

}  // namespace photonbench

// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <numbers>

// Internal units: length unit a = 1 um, c = 1, eps0 = mu0 = 1. A frequency f
// is expressed in c/a (i.e. inverse micrometres), angular frequency is 2*pi*f.
// External interfaces speak nanometres and electron-volts.
namespace photonbench::units {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHcEvNm = 1239.841984;      // h*c in eV*nm
inline constexpr double kPlanck = 6.62607015e-34;   // J*s
inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kFreeSpaceImpedance = 376.73; // ohm

inline constexpr double nm_to_length(double nm) { return nm * 1e-3; }
inline constexpr double length_to_nm(double a) { return a * 1e3; }

inline constexpr double wavelength_to_freq(double nm) { return 1e3 / nm; }
inline constexpr double freq_to_wavelength(double f) { return 1e3 / f; }
inline constexpr double wavelength_to_omega(double nm) { return 2.0 * kPi * 1e3 / nm; }
inline constexpr double omega_to_wavelength(double omega) { return 2.0 * kPi * 1e3 / omega; }

inline constexpr double ev_to_wavelength(double ev) { return kHcEvNm / ev; }
inline constexpr double wavelength_to_ev(double nm) { return kHcEvNm / nm; }

}  // namespace photonbench::units

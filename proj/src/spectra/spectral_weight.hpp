// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace photonbench {

enum class WeightKind { Am15PhotonFlux, Am15Irradiance, D65 };

// Tabulated spectral weight on a wavelength grid. AM1.5 tables can be given
// either as irradiance (W m^-2 nm^-1) or photon flux; both photon flux b_s and
// irradiance I are available from either form.
class SpectralWeight {
 public:
  SpectralWeight() = default;
  SpectralWeight(WeightKind kind, std::vector<double> wavelengths_nm, std::vector<double> values);

  WeightKind kind() const { return kind_; }
  const std::vector<double>& wavelengths() const { return wl_; }
  const std::vector<double>& values() const { return values_; }
  double min_wavelength() const { return wl_.front(); }
  double max_wavelength() const { return wl_.back(); }
  bool covers(double lo_nm, double hi_nm) const;

  // Linear interpolation of the tabulated value (zero outside the table).
  double value(double wavelength_nm) const;
  // Photon flux per unit wavelength, arbitrary but fixed scale. For D65 this
  // is the tabulated power distribution itself.
  double photon_flux_per_nm(double wavelength_nm) const;
  // Per unit photon energy (eV): b_s(E) and I(E) = E b_s(E), with I scaled so
  // that its integral over the whole table is 1000 W/m^2.
  double photon_flux_per_ev(double energy_ev) const;
  double irradiance_per_ev(double energy_ev) const;

  // Tabulated wavelength nodes, converted to energy (ascending).
  std::vector<double> energy_nodes() const;
  double min_energy() const;
  double max_energy() const;

 private:
  WeightKind kind_ = WeightKind::D65;
  std::vector<double> wl_;
  std::vector<double> values_;
  double irradiance_scale_ = 1.0;
};

std::string weight_kind_name(WeightKind k);
WeightKind parse_weight_kind(const std::string& s);
// CSV `wavelength_nm,value` with a `# kind: ...` header line.
SpectralWeight read_spectral_weight(const std::filesystem::path& path);
SpectralWeight parse_spectral_weight(const std::string& text, const std::string& source);

}  // namespace photonbench

// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spectra/spectral_weight.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/units.hpp"

namespace photonbench {

namespace {

double interp(const std::vector<double>& x, const std::vector<double>& y, double v) {
  if (x.empty() || v < x.front() || v > x.back()) return 0.0;
  auto it = std::upper_bound(x.begin(), x.end(), v);
  if (it == x.end()) return y.back();
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  if (hi == 0) return y.front();
  const std::size_t lo = hi - 1;
  const double w = (v - x[lo]) / (x[hi] - x[lo]);
  return y[lo] + w * (y[hi] - y[lo]);
}

}  // namespace

std::string weight_kind_name(WeightKind k) {
  switch (k) {
    case WeightKind::Am15PhotonFlux: return "am15_photon_flux";
    case WeightKind::Am15Irradiance: return "am15_irradiance";
    case WeightKind::D65: return "d65";
  }
  return "d65";
}

WeightKind parse_weight_kind(const std::string& s) {
  if (s == "am15_photon_flux") return WeightKind::Am15PhotonFlux;
  if (s == "am15_irradiance") return WeightKind::Am15Irradiance;
  if (s == "d65") return WeightKind::D65;
  throw InvalidArgument("unknown spectral weight kind '" + s + "'");
}

SpectralWeight::SpectralWeight(WeightKind kind, std::vector<double> wl, std::vector<double> values)
    : kind_(kind), wl_(std::move(wl)), values_(std::move(values)) {
  if (wl_.size() < 2 || wl_.size() != values_.size())
    throw InvalidArgument("spectral weight needs at least two (wavelength, value) rows");
  for (std::size_t k = 0; k < wl_.size(); ++k) {
    if (!(wl_[k] > 0)) throw InvalidArgument("spectral weight wavelengths must be positive");
    if (k > 0 && !(wl_[k] > wl_[k - 1]))
      throw InvalidArgument("spectral weight wavelengths must be strictly increasing");
    if (!(values_[k] >= 0)) throw InvalidArgument("spectral weights must be non-negative");
  }
  // Scale I(E) so that its integral over the table is 1000 W/m^2.
  const auto e = energy_nodes();
  double total = 0.0;
  for (std::size_t k = 1; k < e.size(); ++k)
    total += 0.5 * (e[k] - e[k - 1]) * (irradiance_per_ev(e[k]) + irradiance_per_ev(e[k - 1]));
  if (total > 0) irradiance_scale_ = 1000.0 / total;
}

bool SpectralWeight::covers(double lo, double hi) const {
  return !wl_.empty() && wl_.front() <= lo + 1e-9 && wl_.back() >= hi - 1e-9;
}

double SpectralWeight::value(double l) const { return interp(wl_, values_, l); }

double SpectralWeight::photon_flux_per_nm(double l) const {
  const double v = value(l);
  if (kind_ == WeightKind::Am15Irradiance) return v * l / units::kHcEvNm;
  return v;
}

double SpectralWeight::photon_flux_per_ev(double e) const {
  const double l = units::ev_to_wavelength(e);
  // |d lambda / dE| = hc / E^2.
  return photon_flux_per_nm(l) * units::kHcEvNm / (e * e);
}

double SpectralWeight::irradiance_per_ev(double e) const {
  return irradiance_scale_ * e * photon_flux_per_ev(e);
}

std::vector<double> SpectralWeight::energy_nodes() const {
  std::vector<double> e;
  e.reserve(wl_.size());
  for (auto it = wl_.rbegin(); it != wl_.rend(); ++it) e.push_back(units::wavelength_to_ev(*it));
  return e;
}

double SpectralWeight::min_energy() const { return units::wavelength_to_ev(wl_.back()); }
double SpectralWeight::max_energy() const { return units::wavelength_to_ev(wl_.front()); }

SpectralWeight parse_spectral_weight(const std::string& text, const std::string& source) {
  const auto t = parse_csv(text, source);
  auto it = t.metadata.find("kind");
  if (it == t.metadata.end())
    throw InvalidArgument(source + ": missing '# kind:' header line");
  const auto kind = parse_weight_kind(it->second);
  const auto cl = t.column("wavelength_nm");
  const auto cv = t.column("value");
  std::vector<double> wl, v;
  for (const auto& row : t.rows) {
    wl.push_back(parse_double(row[cl], source));
    v.push_back(parse_double(row[cv], source));
  }
  return SpectralWeight(kind, std::move(wl), std::move(v));
}

SpectralWeight read_spectral_weight(const std::filesystem::path& path) {
  return parse_spectral_weight(read_text_file(path), path.string());
}

}  // namespace photonbench

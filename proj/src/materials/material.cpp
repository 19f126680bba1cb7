// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "materials/material.hpp"

#include <cmath>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/units.hpp"

namespace photonbench {

DispersiveMaterial vacuum_material() {
  DispersiveMaterial m;
  m.name = "Air";
  m.fit_min_nm = 0.0;
  m.fit_max_nm = std::numeric_limits<double>::infinity();
  return m;
}

std::complex<double> permittivity(const DispersiveMaterial& material, double omega) {
  std::complex<double> eps(material.eps_inf, 0.0);
  for (const auto& t : material.terms) {
    const double w2 = t.omega * t.omega;
    const std::complex<double> denom(w2 - omega * omega, -omega * t.gamma);
    eps += t.sigma * w2 / denom;
  }
  return eps;
}

bool is_extrapolation(const DispersiveMaterial& material, double omega) {
  const double nm = units::omega_to_wavelength(omega);
  return nm < material.fit_min_nm || nm > material.fit_max_nm;
}

void validate_terms(const DispersiveMaterial& material) {
  for (std::size_t i = 0; i < material.terms.size(); ++i) {
    const auto& t = material.terms[i];
    const std::string where = material.name + " term " + std::to_string(i);
    if (!(t.sigma >= 0.0)) throw InvalidArgument(where + ": sigma must be >= 0");
    if (!(t.gamma >= 0.0)) throw InvalidArgument(where + ": gamma must be >= 0");
    if (!(t.omega > 0.0)) throw InvalidArgument(where + ": omega must be > 0");
  }
}

nlohmann::ordered_json material_to_json(const DispersiveMaterial& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["eps_inf"] = m.eps_inf;
  auto terms = nlohmann::ordered_json::array();
  for (const auto& t : m.terms) {
    nlohmann::ordered_json jt;
    jt["sigma"] = t.sigma;
    jt["omega"] = t.omega;
    jt["gamma"] = t.gamma;
    jt["drude"] = t.drude;
    terms.push_back(jt);
  }
  j["terms"] = terms;
  if (m.band_gap_ev) j["band_gap_ev"] = *m.band_gap_ev;
  if (m.resistivity_ohm_m) j["resistivity_ohm_m"] = *m.resistivity_ohm_m;
  j["extinction_offset"] = m.extinction_offset;
  j["fit_range_nm"] = {m.fit_min_nm, m.fit_max_nm};
  j["residual"] = m.residual;
  return j;
}

DispersiveMaterial material_from_json(const nlohmann::json& j) {
  DispersiveMaterial m;
  try {
    m.name = j.at("name").get<std::string>();
    m.eps_inf = j.at("eps_inf").get<double>();
    for (const auto& jt : j.at("terms")) {
      LorentzTerm t;
      t.sigma = jt.at("sigma").get<double>();
      t.omega = jt.at("omega").get<double>();
      t.gamma = jt.at("gamma").get<double>();
      t.drude = jt.value("drude", false);
      m.terms.push_back(t);
    }
    if (j.contains("band_gap_ev") && !j["band_gap_ev"].is_null())
      m.band_gap_ev = j["band_gap_ev"].get<double>();
    if (j.contains("resistivity_ohm_m") && !j["resistivity_ohm_m"].is_null())
      m.resistivity_ohm_m = j["resistivity_ohm_m"].get<double>();
    m.extinction_offset = j.value("extinction_offset", 0.0);
    if (j.contains("fit_range_nm")) {
      m.fit_min_nm = j["fit_range_nm"].at(0).get<double>();
      m.fit_max_nm = j["fit_range_nm"].at(1).get<double>();
    }
    m.residual = j.value("residual", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed material JSON: ") + e.what());
  }
  validate_terms(m);
  return m;
}

DispersiveMaterial load_material(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
  return material_from_json(j);
}

void save_material(const std::filesystem::path& path, const DispersiveMaterial& material) {
  write_file_atomic(path, material_to_json(material).dump(2) + "\n");
}

}  // namespace photonbench

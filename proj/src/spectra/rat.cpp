// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "spectra/rat.hpp"

#include <cmath>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/io.hpp"
#include "common/units.hpp"

namespace photonbench {

std::string band_name(Band b) {
  switch (b) {
    case Band::Single550: return "single_550";
    case Band::Visible: return "visible";
    case Band::Solar: return "solar";
  }
  return "visible";
}

Band parse_band(const std::string& s) {
  if (s == "single_550" || s == "550") return Band::Single550;
  if (s == "visible") return Band::Visible;
  if (s == "solar") return Band::Solar;
  throw InvalidArgument("unknown band '" + s + "' (expected single_550, visible or solar)");
}

double band_min_nm(Band b) {
  switch (b) {
    case Band::Single550: return 550.0;
    case Band::Visible: return 380.0;
    case Band::Solar: return 280.0;
  }
  return 380.0;
}

double band_max_nm(Band b) {
  switch (b) {
    case Band::Single550: return 550.0;
    case Band::Visible: return 750.0;
    case Band::Solar: return 2500.0;
  }
  return 750.0;
}

std::vector<double> band_wavelengths(Band b, int points) {
  if (b == Band::Single550) return {550.0};
  if (points < 2) throw InvalidArgument("a broadband spectrum needs at least two points");
  const double fmin = units::wavelength_to_freq(band_max_nm(b));
  const double fmax = units::wavelength_to_freq(band_min_nm(b));
  std::vector<double> wl(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    // Descending frequency gives ascending wavelength; pin the end points exactly.
    const double f = fmax - (fmax - fmin) * k / (points - 1);
    wl[static_cast<std::size_t>(k)] = k == 0            ? band_min_nm(b)
                                      : k == points - 1 ? band_max_nm(b)
                                                        : units::freq_to_wavelength(f);
  }
  return wl;
}

NormalizationRun normalization_from_run(const SimulationRun& run, std::string id) {
  NormalizationRun n;
  n.id = std::move(id);
  n.cell = run.grid().cell;
  n.ny = run.ny();
  n.reflection = run.reflection_monitor();
  n.incident_flux = monitor_flux(run.reflection_monitor());
  n.transmitted_flux = monitor_flux(run.transmission_monitor());
  n.steps = run.steps();
  return n;
}

RatSpectra rat_from_runs(const NormalizationRun& norm, const SimulationRun& run) {
  const auto& refl = run.reflection_monitor();
  if (refl.omega != norm.reflection.omega || refl.nx != norm.reflection.nx ||
      refl.hx_row != norm.reflection.hx_row || refl.dx != norm.reflection.dx ||
      run.ny() != norm.ny || !(run.grid().cell == norm.cell))
    throw InvalidArgument("normalization and structure runs do not share cell, grid or frequencies");
  RatSpectra s;
  s.wavelengths = run.wavelengths();
  s.fidelity = run.config().fidelity;
  s.dx_nm = run.grid().dx;
  s.norm_run_id = norm.id;
  const auto scattered = monitor_flux_difference(refl, norm.reflection);
  const auto trans = monitor_flux(run.transmission_monitor());
  const std::size_t n = s.wavelengths.size();
  s.R.resize(n);
  s.T.resize(n);
  s.A.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double pinc = norm.incident_flux[k];
    if (!(pinc > 0.0))
      throw InvalidArgument("incident flux is not positive at " +
                            format_double(s.wavelengths[k]) +
                            " nm; the source spectrum does not cover this wavelength");
    s.T[k] = trans[k] / pinc;
    s.R[k] = -scattered[k] / pinc;
    s.A[k] = 1.0 - s.R[k] - s.T[k];
    for (auto [name, v] : {std::pair{"R", s.R[k]}, std::pair{"T", s.T[k]}})
      if (v < -0.02 || v > 1.02)
        s.flags.push_back(std::string(name) + " = " + format_double(v) + " at " +
                          format_double(s.wavelengths[k]) + " nm");
  }
  return s;
}

std::string normalization_key(const SimulationCell& cell, const std::vector<double>& wl,
                              const RunConfig& c) {
  std::ostringstream os;
  os << "w=" << format_double(cell.width) << ";h=" << format_double(cell.height)
     << ";m=" << format_double(cell.unit_depth) << ";dx=" << format_double(c.dx())
     << ";S=" << format_double(c.courant) << ";pml=" << format_double(c.pml_order) << ","
     << format_double(c.pml_reflection) << ";decay=" << format_double(c.decay_ratio) << ","
     << c.check_every << "," << c.max_steps << ";amp=" << format_double(c.source_amplitude)
     << ";fc=" << (c.source_center ? format_double(*c.source_center) : "auto")
     << ";df=" << (c.source_width ? format_double(*c.source_width) : "auto") << ";wl=";
  for (double l : wl) os << format_double(l) << ",";
  return os.str();
}

std::shared_ptr<const NormalizationRun> NormalizationCache::get(const SimulationCell& cell,
                                                                const std::vector<double>& wl,
                                                                const RunConfig& config) {
  const auto key = normalization_key(cell, wl, config);
  std::promise<std::shared_ptr<const NormalizationRun>> promise;
  std::shared_future<std::shared_ptr<const NormalizationRun>> pending;
  {
    std::lock_guard lock(mu_);
    auto it = runs_.find(key);
    if (it != runs_.end()) pending = it->second;
    else runs_.emplace(key, promise.get_future().share());
  }
  if (pending.valid()) return pending.get();
  try {
    const auto grid = rasterize(empty_layout(cell), config.dx());
    SimulationRun run(grid, {vacuum_material()}, wl, config);
    run.run_until_decay();
    auto result = std::make_shared<const NormalizationRun>(
        normalization_from_run(run, "norm-" + std::to_string(fnv1a(key))));
    promise.set_value(result);
    return result;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    runs_.erase(key);
    throw;
  }
}

std::size_t NormalizationCache::size() const {
  std::lock_guard lock(mu_);
  return runs_.size();
}

SimulationResult simulate_layout(const Layout& layout, const MaterialLibrary& library,
                                 const std::vector<double>& wl, const RunConfig& config,
                                 NormalizationCache* cache,
                                 const std::function<void(SimulationRun&)>& configure,
                                 const std::function<void(const SimulationRun&)>& finish) {
  std::shared_ptr<const NormalizationRun> norm;
  if (cache) {
    norm = cache->get(layout.cell, wl, config);
  } else {
    NormalizationCache local;
    norm = local.get(layout.cell, wl, config);
  }
  const auto grid = rasterize(layout, config.dx());
  SimulationRun run(grid, resolve_palette(grid, library), wl, config);
  if (configure) configure(run);
  run.run_until_decay();
  if (finish) finish(run);
  SimulationResult r;
  r.spectra = rat_from_runs(*norm, run);
  r.steps = run.steps();
  r.warnings = grid.warnings;
  Fnv1a h;
  h.add(grid.ids.data(), grid.ids.size());
  for (const auto& p : grid.palette) h.add(p);
  r.spectra.struct_run_id = "run-" + std::to_string(h.value());
  return r;
}

std::string format_rat_csv(const RatSpectra& s) {
  std::ostringstream os;
  os << "wavelength_nm,R,A,T\n";
  for (std::size_t k = 0; k < s.wavelengths.size(); ++k)
    os << format_double(s.wavelengths[k]) << ',' << format_double(s.R[k]) << ','
       << format_double(s.A[k]) << ',' << format_double(s.T[k]) << '\n';
  return os.str();
}

nlohmann::ordered_json rat_metadata(const RatSpectra& s) {
  nlohmann::ordered_json j;
  j["fidelity"] = fidelity_name(s.fidelity);
  j["dx_nm"] = s.dx_nm;
  j["points"] = s.wavelengths.size();
  j["norm_run_id"] = s.norm_run_id;
  j["struct_run_id"] = s.struct_run_id;
  j["flags"] = s.flags;
  return j;
}

RatSpectra parse_rat_csv(const std::string& text, const std::string& source) {
  const auto t = parse_csv(text, source);
  const auto cl = t.column("wavelength_nm"), cr = t.column("R"), ca = t.column("A"),
             ct = t.column("T");
  RatSpectra s;
  for (const auto& row : t.rows) {
    s.wavelengths.push_back(parse_double(row[cl], source));
    s.R.push_back(parse_double(row[cr], source));
    s.A.push_back(parse_double(row[ca], source));
    s.T.push_back(parse_double(row[ct], source));
  }
  return s;
}

}  // namespace photonbench

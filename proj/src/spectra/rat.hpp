// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdtd/simulation.hpp"
#include "geometry/raster.hpp"
#include "materials/library.hpp"

namespace photonbench {

enum class Band { Single550, Visible, Solar };

std::string band_name(Band b);
Band parse_band(const std::string& s);
// Sample wavelengths (nm, ascending): `points` evenly spaced in 1/lambda
// across the band; Single550 is the single point 550 nm.
std::vector<double> band_wavelengths(Band b, int points = 64);
double band_min_nm(Band b);
double band_max_nm(Band b);

struct RatSpectra {
  std::vector<double> wavelengths;  // nm, ascending
  std::vector<double> R, A, T;
  Fidelity fidelity = Fidelity::Medium;
  double dx_nm = 0.0;
  std::string norm_run_id;
  std::string struct_run_id;
  // Wavelength-tagged notes where R or T leaves [-0.02, 1.02].
  std::vector<std::string> flags;

  double min_wavelength() const { return wavelengths.front(); }
  double max_wavelength() const { return wavelengths.back(); }
};

// Result of an empty-cell run, which is all a normalization needs to keep.
struct NormalizationRun {
  std::string id;
  SimulationCell cell;
  int ny = 0;
  DftMonitor reflection;
  std::vector<double> incident_flux;
  std::vector<double> transmitted_flux;
  std::int64_t steps = 0;
};

NormalizationRun normalization_from_run(const SimulationRun& run, std::string id);

// T = P_trans / P_inc; R = -flux(struct - norm fields at the reflection
// monitor) / P_inc; A = 1 - R - T.
RatSpectra rat_from_runs(const NormalizationRun& norm, const SimulationRun& structure);

// Thread-safe memo of normalization runs keyed by cell, grid spacing,
// frequency list and solver settings. Concurrent requests for the same key
// share one computation.
class NormalizationCache {
 public:
  std::shared_ptr<const NormalizationRun> get(const SimulationCell& cell,
                                              const std::vector<double>& wavelengths_nm,
                                              const RunConfig& config);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<std::shared_ptr<const NormalizationRun>>> runs_;
};

std::string normalization_key(const SimulationCell& cell, const std::vector<double>& wavelengths_nm,
                              const RunConfig& config);

struct SimulationResult {
  RatSpectra spectra;
  std::int64_t steps = 0;
  std::vector<std::string> warnings;
};

// Rasterizes, runs the structure to decay, and normalizes against the empty
// cell (taken from `cache` when given). `configure` runs on the structure run
// before stepping, e.g. to enable snapshots; `finish` sees it afterwards.
SimulationResult simulate_layout(
    const Layout& layout, const MaterialLibrary& library, const std::vector<double>& wavelengths_nm,
    const RunConfig& config, NormalizationCache* cache = nullptr,
    const std::function<void(SimulationRun&)>& configure = {},
    const std::function<void(const SimulationRun&)>& finish = {});

// CSV `wavelength_nm,R,A,T` and a JSON sidecar with fidelity and run metadata.
std::string format_rat_csv(const RatSpectra& s);
nlohmann::ordered_json rat_metadata(const RatSpectra& s);
RatSpectra parse_rat_csv(const std::string& text, const std::string& source);

}  // namespace photonbench

// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "geometry/raster.hpp"
#include "materials/library.hpp"
#include "materials/material.hpp"

namespace photonbench {

enum class Fidelity { Low, Medium, High };

std::string fidelity_name(Fidelity f);
Fidelity parse_fidelity(const std::string& name);
// Default grid spacing in nm: 10 / 5 / 1.
double fidelity_dx(Fidelity f);

struct RunConfig {
  Fidelity fidelity = Fidelity::Medium;
  std::optional<double> dx_nm;  // overrides the fidelity map
  double courant = 0.5;
  double pml_order = 4.0;
  double pml_reflection = 1e-6;
  double decay_ratio = 1e-6;
  int check_every = 50;
  std::int64_t max_steps = 1'000'000;
  double source_amplitude = 1.0;
  // Source spectrum overrides (frequencies in units of c / 1 um).
  std::optional<double> source_center;
  std::optional<double> source_width;

  double dx() const { return dx_nm ? *dx_nm : fidelity_dx(fidelity); }
};

// Gaussian-modulated sinusoid: A sin(2 pi fc (t - t0)) exp(-(t - t0)^2 / (2 w^2)),
// w = 1 / df, switched off after 2 t0.
struct GaussianSource {
  double center = 1.0;  // fc
  double width = 1.0;   // df
  double amplitude = 1.0;
  double t0 = 0.0;
  int row = 0;  // Ez row of the line source

  double sigma_t() const { return 1.0 / width; }
  double cutoff() const { return 2.0 * t0; }
  double value(double t) const;
  double envelope(double t) const;
};

// Source spectrum for a set of wavelengths: band midpoint in 1/lambda, width
// 1.2x the band (10% of fc for a single wavelength).
GaussianSource source_for_wavelengths(const std::vector<double>& wavelengths_nm);

// Running DFT of the tangential fields along one grid line. `hx_row` indexes
// the Hx row; Ez is the average of the two Ez rows on either side.
struct DftMonitor {
  int hx_row = 0;
  int nx = 0;
  double dx = 0.0;  // internal length units
  std::vector<double> omega;
  std::vector<std::complex<double>> ez;  // [freq * nx + i]
  std::vector<std::complex<double>> hx;

  std::complex<double> ez_at(std::size_t k, int i) const { return ez[k * nx + i]; }
  std::complex<double> hx_at(std::size_t k, int i) const { return hx[k * nx + i]; }
};

// P(w_k) = Re sum_i conj(Ez) Hx / 2 dx, positive for power travelling down (+y).
std::vector<double> monitor_flux(const DftMonitor& m);
// Flux of the field difference a - b (scattered field when b is the incident run).
std::vector<double> monitor_flux_difference(const DftMonitor& a, const DftMonitor& b);

struct FieldSnapshot {
  std::int64_t step = 0;
  double time = 0.0;
  std::vector<float> ez, hx, hy;
};

class SimulationRun {
 public:
  // `materials` is parallel to grid.palette; entry 0 must be vacuum.
  SimulationRun(const MaterialGrid& grid, const std::vector<DispersiveMaterial>& materials,
                const std::vector<double>& wavelengths_nm, const RunConfig& config);

  void step();
  void run_steps(std::int64_t n);
  // Steps until |Ez| at the probe stays below ratio x running peak for
  // check_every consecutive steps after source turn-off. Throws TimeoutError
  // at max_steps and DivergenceError on non-finite fields.
  void run_until_decay();

  void enable_snapshots(std::int64_t stride);
  const std::vector<FieldSnapshot>& snapshots() const { return snapshots_; }
  std::int64_t snapshot_stride() const { return snapshot_stride_; }

  const DftMonitor& reflection_monitor() const { return refl_; }
  const DftMonitor& transmission_monitor() const { return trans_; }
  const GaussianSource& source() const { return source_; }
  const std::vector<double>& wavelengths() const { return wavelengths_; }
  const MaterialGrid& grid() const { return grid_; }
  const RunConfig& config() const { return config_; }

  std::int64_t steps() const { return steps_; }
  double time() const { return static_cast<double>(steps_) * dt_; }
  double dt() const { return dt_; }
  double dx() const { return dx_; }  // internal units
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double probe_value() const;
  double max_abs_field() const;

  const std::vector<double>& ez() const { return ez_; }
  const std::vector<double>& hx() const { return hx_; }
  const std::vector<double>& hy() const { return hy_; }
  // Direct field access for tests (initial conditions, impulses).
  std::vector<double>& mutable_ez() { return ez_; }
  std::vector<double>& mutable_dz() { return dz_; }

 private:
  struct DispersiveBlock {
    double inv_eps_inf = 1.0;
    std::vector<std::size_t> cells;
    std::vector<double> c1, c2, c3;          // per term
    std::vector<std::vector<double>> p, pm;  // [term][cell]
  };

  void update_h();
  void update_d();
  void update_e();
  void accumulate(DftMonitor& m);
  void check_finite();
  void record_snapshot();

  MaterialGrid grid_;
  RunConfig config_;
  std::vector<double> wavelengths_;
  GaussianSource source_;
  int nx_ = 0, ny_ = 0;
  double dx_ = 0.0, dt_ = 0.0;
  std::int64_t steps_ = 0;

  std::vector<double> ez_, dz_, hx_, hy_;
  std::vector<double> inv_eps_;  // per cell, 0 for dispersive cells
  std::vector<DispersiveBlock> dispersive_;

  // PML: per-row coefficients and the split Dzy component.
  std::vector<double> ca_e_, cb_e_, ca_h_, cb_h_;
  std::vector<char> pml_row_;
  std::vector<double> dzy_;

  DftMonitor refl_, trans_;
  int probe_i_ = 0, probe_j_ = 0;

  std::int64_t snapshot_stride_ = 0;
  std::vector<FieldSnapshot> snapshots_;
};

// Palette names resolved through a library (index 0 is always vacuum).
std::vector<DispersiveMaterial> resolve_palette(const MaterialGrid& grid,
                                                const MaterialLibrary& library);

enum class SnapshotFormat { Binary, Csv };
// Binary layout (little endian): magic "PBSNAP01"; int32 nx, ny; float64 dx_nm,
// dt; int64 stride, count; then per frame int64 step, float64 time and
// float32 arrays Ez, Hx, Hy of nx*ny values each, row-major (j * nx + i).
void export_snapshots(const SimulationRun& run, const std::filesystem::path& path,
                      SnapshotFormat format);

}  // namespace photonbench

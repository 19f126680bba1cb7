// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "common/units.hpp"
#include "materials/material.hpp"
#include "materials/tabulated.hpp"

namespace photonbench {

struct FitConfig {
  int n_terms = 3;  // total number of susceptibility terms
  int n_drude = 0;  // how many of the terms are Drude terms
  int restarts = 10;
  int adam_iterations = 3000;
  double learning_rate = 0.05;
  int polish_iterations = 200;
  // Fits whose mean squared error relative to mean |eps|^2 stays above this
  // ceiling are reported as non-converged.
  double max_relative_residual = 0.05;
  double min_wavelength_nm = 280.0;
  double max_wavelength_nm = 2500.0;
  // Resonances are kept inside [min, max]; the upper bound keeps the explicit
  // polarization update well inside its stability limit.
  double min_resonance_omega = units::wavelength_to_omega(50000.0);
  double max_resonance_omega = units::wavelength_to_omega(80.0);
  double eps_inf_min = 1.0;
  std::uint64_t seed = 1;
};

struct FitResult {
  DispersiveMaterial material;
  double residual = 0.0;           // mean |eps_model - eps_data|^2
  double relative_residual = 0.0;  // residual / mean |eps_data|^2
  int samples = 0;
};

// Fits eps_inf plus `n_terms` susceptibility terms to (n + ik)^2 of the table
// over the configured wavelength window. Positive parameters are optimised in
// log space; each restart runs Adam and then a damped Gauss-Newton polish, and
// the best restart wins. Throws NotConvergedError when the best relative
// residual exceeds the ceiling.
FitResult fit_drude_lorentz(const TabulatedIndex& table, const FitConfig& config,
                            const std::string& name = "");

}  // namespace photonbench

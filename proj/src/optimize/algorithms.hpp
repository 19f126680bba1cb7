// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "optimize/handle.hpp"

namespace photonbench {

// All optimizers minimize internally (maximized objectives are negated at
// the handle) and stop at `budget` evaluations; traces never exceed it.

// Independent uniform draws in the box, or uniform block materials on a
// combinatorial handle.
OptimizationTrace random_search(ObjectiveHandle& handle, int budget, std::uint64_t seed);

struct PowellOptions {
  std::optional<std::vector<double>> start;  // default: uniform draw from the seed
  double ftol = 1e-8;                        // relative improvement per sweep
  double xtol = 1e-10;                       // golden-section width, fraction of the box
};
OptimizationTrace powell(ObjectiveHandle& handle, int budget, std::uint64_t seed,
                         const PowellOptions& options = {});

struct DirectOptions {
  double epsilon = 1e-4;
  int max_divisions = 1000;  // rectangles divided per iteration
};
OptimizationTrace direct(ObjectiveHandle& handle, int budget, const DirectOptions& options = {});

struct DeOptions {
  int population = 0;  // 0: 15 per dimension, at most 100
  double f = 0.8;
  double cr = 0.9;
  // Initial population; default uniform draws.
  std::optional<std::vector<std::vector<double>>> initial;
};
int default_de_population(int dim);
OptimizationTrace differential_evolution(ObjectiveHandle& handle, int budget, std::uint64_t seed,
                                         const DeOptions& options = {});

struct BoOptions {
  int n_init = 0;           // 0: min(budget, 2d + 1), at least 2
  int candidates = 1024;    // acquisition start pool
  int local_starts = 5;     // best candidates refined by local search
  int hyper_starts = 3;     // log-likelihood restarts (plus the previous optimum)
  int hyper_iterations = 40;
};
OptimizationTrace bayes_opt(ObjectiveHandle& handle, int budget, std::uint64_t seed,
                            const BoOptions& options = {});

// Uniform i.i.d. materials for every block of a combinatorial handle.
OptimizationTrace blocks_random_search(ObjectiveHandle& handle, int budget, std::uint64_t seed);

}  // namespace photonbench

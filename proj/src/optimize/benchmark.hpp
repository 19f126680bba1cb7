// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optimize/algorithms.hpp"

namespace photonbench {

// Registered names: random, powell, direct, de, bo.
const std::vector<std::string>& algorithm_names();
OptimizationTrace run_algorithm(const std::string& name, ObjectiveHandle& handle, int budget,
                                std::uint64_t seed);

struct BenchmarkOptions {
  std::vector<std::string> algorithms;
  int budget = 200;
  std::vector<std::uint64_t> seeds;  // shared by every algorithm; one repeat per seed
  int workers = 1;
};

struct CurvePoint {
  int iteration = 0;
  double mean = 0.0;  // of best-so-far over repeats
  double se = 0.0;    // standard error of that mean
  int count = 0;      // repeats with a successful evaluation so far
};

struct AlgorithmCurve {
  std::string algorithm;
  std::vector<CurvePoint> points;  // iterations 1..budget
};

struct BenchmarkReport {
  Direction direction = Direction::Maximize;
  int budget = 0;
  std::vector<OptimizationTrace> traces;  // algorithm-major, then seed order
  std::vector<AlgorithmCurve> curves;
};

// Runs every (algorithm, seed) pair on its own copy of `handle`, in parallel
// across `workers` threads; results do not depend on the worker count.
BenchmarkReport run_benchmark(const ObjectiveHandle& handle, const BenchmarkOptions& options);

// Mean and standard error of best-so-far per iteration. Traces that stop
// early carry their last best forward.
std::vector<AlgorithmCurve> summarize(const std::vector<OptimizationTrace>& traces, int budget);

// algorithm,seed,iteration,best_so_far,value,wall_ms
std::string traces_csv(const std::vector<OptimizationTrace>& traces);
std::vector<OptimizationTrace> parse_traces_csv(const std::string& text, const std::string& source);
// algorithm,iteration,mean_best,se_best,count
std::string curves_csv(const std::vector<AlgorithmCurve>& curves);
nlohmann::ordered_json curves_json(const std::vector<AlgorithmCurve>& curves, int budget,
                                   Direction direction);

}  // namespace photonbench

// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "optimize/handle.hpp"

namespace photonbench::detail {

// Thrown by Recorder once the budget is spent; optimizers let it unwind to
// their entry point, which returns the trace collected so far.
struct BudgetExhausted {};

// Evaluates through a handle, appends trace records and converts values to
// the minimized scale the algorithms work in. Failures map to +inf.
class Recorder {
 public:
  Recorder(ObjectiveHandle& handle, int budget, std::string algorithm, std::uint64_t seed)
      : handle_(handle), budget_(budget), start_(std::chrono::steady_clock::now()) {
    trace_.algorithm = std::move(algorithm);
    trace_.seed = seed;
    trace_.direction = handle.direction();
    trace_.records.reserve(static_cast<std::size_t>(std::max(budget, 0)));
  }

  int used() const { return static_cast<int>(trace_.records.size()); }
  int remaining() const { return budget_ - used(); }

  double operator()(std::span<const double> x) {
    if (remaining() <= 0) throw BudgetExhausted{};
    const double v = handle_.evaluate(x);
    return record(std::vector<double>(x.begin(), x.end()), v);
  }

  double blocks(const std::vector<int>& b) {
    if (remaining() <= 0) throw BudgetExhausted{};
    const double v = handle_.evaluate_blocks(b);
    return record(std::vector<double>(b.begin(), b.end()), v);
  }

  OptimizationTrace take() { return std::move(trace_); }

 private:
  double record(std::vector<double> point, double v) {
    TraceRecord r;
    r.iteration = used() + 1;
    r.point = std::move(point);
    r.value = v;
    const double prev = trace_.records.empty() ? std::nan("") : trace_.records.back().best_so_far;
    if (std::isnan(v)) {
      r.best_so_far = prev;
    } else if (std::isnan(prev)) {
      r.best_so_far = v;
    } else {
      r.best_so_far = handle_.direction() == Direction::Maximize ? std::max(prev, v)
                                                                 : std::min(prev, v);
    }
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                          start_).count();
    trace_.records.push_back(std::move(r));
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : handle_.to_minimized(v);
  }

  ObjectiveHandle& handle_;
  int budget_;
  std::chrono::steady_clock::time_point start_;
  OptimizationTrace trace_;
};

}  // namespace photonbench::detail

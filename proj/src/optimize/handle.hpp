// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "geometry/search_space.hpp"
#include "surrogate/mlp.hpp"

namespace photonbench {

enum class EvaluationMode { GridLookup, Surrogate, Simulation, Function };
enum class Direction { Maximize, Minimize };

std::string mode_name(EvaluationMode m);
EvaluationMode parse_mode(const std::string& name);

// A black-box objective over a continuous box, a stored grid, or the
// combinatorial material-block space. Copies share the objective but keep
// their own cost counter, so one handle can seed many independent runs.
//
// Failed evaluations (diverged or timed-out simulations, failed dataset rows)
// return NaN; they are counted but never become the incumbent.
class ObjectiveHandle {
 public:
  using BoxObjective = std::function<double(std::span<const double>)>;
  using BlockObjective = std::function<double(const std::vector<int>&)>;

  // Continuous box, objective supplied directly.
  static ObjectiveHandle function(std::vector<double> lower, std::vector<double> upper,
                                  BoxObjective f, Direction direction);
  // Values stored per grid index (NaN marks a failed point). Queries snap to
  // the nearest grid point, ties toward the lower index; coordinates outside
  // the box are clamped to it.
  static ObjectiveHandle grid_lookup(SearchSpace space, std::vector<double> values,
                                     Direction direction, std::uint64_t combo = 0);
  static ObjectiveHandle surrogate(std::shared_ptr<const MlpSurrogate> model, Direction direction);
  // Live simulation over the box of a search space; `f` receives a structure
  // and may throw DivergenceError or TimeoutError.
  static ObjectiveHandle simulation(SearchSpace space,
                                    std::function<double(const StructureSpec&)> f,
                                    Direction direction, std::uint64_t combo = 0);
  // Combinatorial blocks: `count` sites, each one of `choices` materials.
  static ObjectiveHandle blocks(int count, int choices, BlockObjective f, Direction direction);

  EvaluationMode mode() const { return mode_; }
  Direction direction() const { return direction_; }
  bool combinatorial() const { return static_cast<bool>(block_f_); }
  int dim() const { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  int block_count() const { return block_count_; }
  int block_choices() const { return block_choices_; }

  // Objective value in the handle's own direction. Points outside the box
  // are rejected except in GridLookup mode. Each call costs one evaluation.
  double evaluate(std::span<const double> x);
  double evaluate_blocks(const std::vector<int>& blocks);

  // Value to minimize: the objective, negated for maximization.
  double to_minimized(double value) const {
    return direction_ == Direction::Maximize ? -value : value;
  }

  std::uint64_t cost() const { return cost_; }
  void reset_cost() { cost_ = 0; }

  // GridLookup only: the grid point a query maps to.
  std::uint64_t grid_index(std::span<const double> x) const;
  const SearchSpace* space() const { return space_.get(); }

 private:
  EvaluationMode mode_ = EvaluationMode::Function;
  Direction direction_ = Direction::Maximize;
  std::vector<double> lower_, upper_;
  BoxObjective box_f_;
  BlockObjective block_f_;
  std::shared_ptr<const SearchSpace> space_;
  std::uint64_t combo_ = 0;
  int block_count_ = 0, block_choices_ = 0;
  std::uint64_t cost_ = 0;
};

struct TraceRecord {
  int iteration = 0;  // 1-based evaluation count
  std::vector<double> point;
  double value = 0.0;        // NaN when the evaluation failed
  double best_so_far = 0.0;  // NaN until the first success
  double wall_ms = 0.0;      // since the start of the run
};

struct OptimizationTrace {
  std::string algorithm;
  std::uint64_t seed = 0;
  Direction direction = Direction::Maximize;
  std::vector<TraceRecord> records;

  std::size_t size() const { return records.size(); }
  // Final best-so-far (NaN if every evaluation failed).
  double best() const { return records.empty() ? std::nan("") : records.back().best_so_far; }
  std::vector<double> best_point() const;
};

}  // namespace photonbench

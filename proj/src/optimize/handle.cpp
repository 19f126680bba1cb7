// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "optimize/handle.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/io.hpp"

namespace photonbench {

std::string mode_name(EvaluationMode m) {
  switch (m) {
    case EvaluationMode::GridLookup: return "grid";
    case EvaluationMode::Surrogate: return "surrogate";
    case EvaluationMode::Simulation: return "simulation";
    case EvaluationMode::Function: return "function";
  }
  return "function";
}

EvaluationMode parse_mode(const std::string& name) {
  if (name == "grid" || name == "grid_lookup") return EvaluationMode::GridLookup;
  if (name == "surrogate") return EvaluationMode::Surrogate;
  if (name == "simulation") return EvaluationMode::Simulation;
  throw InvalidArgument("unknown evaluation mode '" + name +
                        "' (expected grid, surrogate or simulation)");
}

namespace {

void check_box(const std::vector<double>& lower, const std::vector<double>& upper) {
  if (lower.empty() || lower.size() != upper.size())
    throw InvalidArgument("objective bounds need matching, non-empty lower and upper vectors");
  for (std::size_t k = 0; k < lower.size(); ++k)
    if (!(std::isfinite(lower[k]) && std::isfinite(upper[k]) && lower[k] <= upper[k]))
      throw InvalidArgument("objective bound " + std::to_string(k) + " is not a finite interval");
}

void space_box(const SearchSpace& s, std::vector<double>& lower, std::vector<double>& upper) {
  for (const auto& p : s.params) {
    lower.push_back(p.lower);
    // Top grid value, which may sit below `upper` when the increment does
    // not divide the range.
    upper.push_back(p.value(p.count() - 1));
  }
}

}  // namespace

ObjectiveHandle ObjectiveHandle::function(std::vector<double> lower, std::vector<double> upper,
                                          BoxObjective f, Direction direction) {
  check_box(lower, upper);
  if (!f) throw InvalidArgument("objective function is empty");
  ObjectiveHandle h;
  h.mode_ = EvaluationMode::Function;
  h.direction_ = direction;
  h.lower_ = std::move(lower);
  h.upper_ = std::move(upper);
  h.box_f_ = std::move(f);
  return h;
}

ObjectiveHandle ObjectiveHandle::grid_lookup(SearchSpace space, std::vector<double> values,
                                             Direction direction, std::uint64_t combo) {
  if (values.size() != space.count())
    throw InvalidArgument("grid lookup needs one value per grid point: space has " +
                          std::to_string(space.count()) + ", got " +
                          std::to_string(values.size()));
  if (combo >= space.material_combinations())
    throw InvalidArgument("material combination " + std::to_string(combo) + " out of range");
  ObjectiveHandle h;
  h.mode_ = EvaluationMode::GridLookup;
  h.direction_ = direction;
  space_box(space, h.lower_, h.upper_);
  h.space_ = std::make_shared<const SearchSpace>(std::move(space));
  h.combo_ = combo;
  auto table = std::make_shared<const std::vector<double>>(std::move(values));
  h.box_f_ = [table, space = h.space_, combo](std::span<const double> x) {
    return (*table)[space->nearest_index(std::vector<double>(x.begin(), x.end()), combo)];
  };
  return h;
}

ObjectiveHandle ObjectiveHandle::surrogate(std::shared_ptr<const MlpSurrogate> model,
                                           Direction direction) {
  if (!model) throw InvalidArgument("surrogate handle needs a model");
  ObjectiveHandle h;
  h.mode_ = EvaluationMode::Surrogate;
  h.direction_ = direction;
  h.lower_ = model->lower();
  h.upper_ = model->upper();
  check_box(h.lower_, h.upper_);
  h.box_f_ = [model](std::span<const double> x) { return model->predict(x); };
  return h;
}

ObjectiveHandle ObjectiveHandle::simulation(SearchSpace space,
                                            std::function<double(const StructureSpec&)> f,
                                            Direction direction, std::uint64_t combo) {
  if (!f) throw InvalidArgument("simulation objective is empty");
  if (combo >= space.material_combinations())
    throw InvalidArgument("material combination " + std::to_string(combo) + " out of range");
  ObjectiveHandle h;
  h.mode_ = EvaluationMode::Simulation;
  h.direction_ = direction;
  for (const auto& p : space.params) {
    h.lower_.push_back(p.lower);
    h.upper_.push_back(p.upper);
  }
  auto shared = std::make_shared<const SearchSpace>(std::move(space));
  h.space_ = shared;
  h.combo_ = combo;
  h.box_f_ = [shared, f = std::move(f), combo](std::span<const double> x) -> double {
    StructureSpec spec;
    spec.variant = shared->variant;
    for (std::size_t k = 0; k < shared->params.size(); ++k) spec.params[shared->params[k].name] = x[k];
    spec.materials = shared->materials_at(combo);
    try {
      return f(spec);
    } catch (const DivergenceError&) {
      return std::nan("");
    } catch (const TimeoutError&) {
      return std::nan("");
    }
  };
  return h;
}

ObjectiveHandle ObjectiveHandle::blocks(int count, int choices, BlockObjective f,
                                        Direction direction) {
  if (count < 1 || choices < 1) throw InvalidArgument("block space needs sites and choices");
  if (!f) throw InvalidArgument("block objective is empty");
  ObjectiveHandle h;
  h.mode_ = EvaluationMode::Simulation;
  h.direction_ = direction;
  h.block_count_ = count;
  h.block_choices_ = choices;
  h.block_f_ = [f = std::move(f)](const std::vector<int>& b) -> double {
    try {
      return f(b);
    } catch (const DivergenceError&) {
      return std::nan("");
    } catch (const TimeoutError&) {
      return std::nan("");
    }
  };
  return h;
}

double ObjectiveHandle::evaluate(std::span<const double> x) {
  if (combinatorial()) throw InvalidArgument("block objectives take material grids, not points");
  if (x.size() != lower_.size())
    throw InvalidArgument("objective expects " + std::to_string(lower_.size()) +
                          " coordinates, got " + std::to_string(x.size()));
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]))
      throw InvalidArgument("coordinate " + std::to_string(k) + " is not finite");
    if (mode_ != EvaluationMode::GridLookup && (x[k] < lower_[k] || x[k] > upper_[k]))
      throw InvalidArgument("coordinate " + std::to_string(k) + " = " + format_double(x[k]) +
                            " lies outside [" + format_double(lower_[k]) + ", " +
                            format_double(upper_[k]) + "]");
  }
  ++cost_;
  return box_f_(x);
}

double ObjectiveHandle::evaluate_blocks(const std::vector<int>& b) {
  if (!combinatorial()) throw InvalidArgument("objective is not a block objective");
  if (b.size() != static_cast<std::size_t>(block_count_))
    throw InvalidArgument("block grid needs " + std::to_string(block_count_) + " entries");
  for (int v : b)
    if (v < 0 || v >= block_choices_) throw InvalidArgument("block material out of range");
  ++cost_;
  return block_f_(b);
}

std::uint64_t ObjectiveHandle::grid_index(std::span<const double> x) const {
  if (mode_ != EvaluationMode::GridLookup) throw InvalidArgument("handle is not a grid lookup");
  return space_->nearest_index(std::vector<double>(x.begin(), x.end()), combo_);
}

std::vector<double> OptimizationTrace::best_point() const {
  const TraceRecord* best = nullptr;
  for (const auto& r : records) {
    if (std::isnan(r.value)) continue;
    const bool better = !best || (direction == Direction::Maximize ? r.value > best->value
                                                                   : r.value < best->value);
    if (better) best = &r;
  }
  return best ? best->point : std::vector<double>{};
}

}  // namespace photonbench

// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdtd/simulation.hpp"
#include "geometry/search_space.hpp"
#include "spectra/objectives.hpp"
#include "surrogate/mlp.hpp"

namespace photonbench {

struct DatasetRow {
  std::uint64_t index = 0;  // grid index in the search space
  std::vector<double> params;
  std::uint64_t material_combo = 0;
  Fidelity fidelity = Fidelity::Medium;
  ObjectiveKind objective = ObjectiveKind::Transmittance550;
  double value = 0.0;  // NaN for failed rows
  bool failed() const { return !(value == value); }
};

// Seeded choice of `count` distinct grid indices out of `total`, ascending.
std::vector<std::uint64_t> subsample_indices(std::uint64_t total, std::uint64_t count,
                                             std::uint64_t seed);

// Objective evaluator for one grid point; may throw DivergenceError or
// TimeoutError, which mark the row as failed.
using PointEvaluator = std::function<double(std::uint64_t index, const StructureSpec& spec)>;

struct DatasetOptions {
  Fidelity fidelity = Fidelity::Medium;
  ObjectiveKind objective = ObjectiveKind::Transmittance550;
  std::optional<std::uint64_t> subsample;
  std::uint64_t seed = 0;
  int workers = 1;
  // Stop (leaving the journal in place) after this many new rows; for tests
  // of resumption.
  std::optional<std::uint64_t> stop_after;
};

struct DatasetReport {
  std::uint64_t selected = 0;
  std::uint64_t evaluated = 0;  // this invocation
  std::uint64_t resumed = 0;    // rows taken from an existing journal
  std::vector<std::pair<std::uint64_t, std::string>> failures;
  bool complete = false;
};

// Evaluates every selected point of `space` and writes `<out>` (CSV) and
// `<out>.manifest.json` atomically once all rows exist. Progress goes to an
// append-only journal `<out>.partial`; a rerun resumes from it.
DatasetReport generate_dataset(const SearchSpace& space, const PointEvaluator& evaluate,
                               const DatasetOptions& options, const std::filesystem::path& out);

// In-memory variant (no files), rows in index order.
std::vector<DatasetRow> evaluate_dataset(const SearchSpace& space, const PointEvaluator& evaluate,
                                         const DatasetOptions& options);

std::string dataset_header(const SearchSpace& space);
std::string format_dataset_row(const DatasetRow& row);
std::vector<DatasetRow> parse_dataset_csv(const std::string& text, const std::string& source);
std::vector<DatasetRow> read_dataset(const std::filesystem::path& path);

struct SplitSpec {
  double train = 0.70;
  double validation = 0.10;
  double test = 0.20;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<std::size_t> train, validation, test;  // row positions
};

Split split_rows(std::size_t n, const SplitSpec& spec);

// Surrogate inputs of a space: its parameters plus the material combination
// when there is more than one.
struct SurrogateInputs {
  std::vector<std::string> names;
  std::vector<double> lower, upper;
};
SurrogateInputs surrogate_inputs(const SearchSpace& space);
std::vector<double> surrogate_input(const SearchSpace& space, const std::vector<double>& params,
                                    std::uint64_t combo);

// Successful rows at the given positions as a training matrix.
TrainingSet training_set(const SearchSpace& space, const std::vector<DatasetRow>& rows,
                         const std::vector<std::size_t>& positions);

}  // namespace photonbench

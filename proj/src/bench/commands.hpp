// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fdtd/simulation.hpp"
#include "geometry/structure.hpp"
#include "materials/library.hpp"

namespace photonbench {

// fit-material, simulate, sweep, train-surrogate, optimize, report.
const std::vector<std::string>& command_names();

struct CommandResult {
  nlohmann::ordered_json summary;  // machine-readable outcome
  std::string message;             // one or more lines for a terminal
};

// Runs one subcommand on a parsed config (TOML tables as JSON objects).
// Unknown keys and malformed values raise ConfigError before any work starts.
// Relative paths resolve against the working directory.
CommandResult run_command(const std::string& command, const nlohmann::json& config);

// Process exit status for an error: 2 config or argument errors, 3 simulation
// divergence, 4 resource cap, 1 anything else.
int exit_code_for(const std::exception& e);

// Worker count: the configured value, else $PHOTONBENCH_WORKERS, else the
// hardware concurrency (at least 1).
int resolve_workers(std::optional<std::int64_t> configured);

// Peak memory of one structure run plus its normalization run, in bytes.
std::uint64_t estimate_run_bytes(const StructureSpec& spec, const MaterialLibrary& library,
                                 const RunConfig& config, std::size_t wavelengths,
                                 std::int64_t snapshot_frames = 0);

// Memory budget: the configured MiB, else $PHOTONBENCH_MEMORY_LIMIT_MB, else
// half of physical memory.
std::uint64_t memory_budget_bytes(std::optional<std::int64_t> configured_mb);

// Workers allowed to run concurrently under the budget; throws
// ResourceCapError when a single run does not fit.
int capped_workers(int workers, std::uint64_t run_bytes, std::uint64_t budget_bytes);

}  // namespace photonbench

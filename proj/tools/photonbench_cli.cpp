// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Every flag becomes a key in a JSON override object
// that the library merges over the TOML file given with --config.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "photonbench/photonbench.h"

namespace {

// Flag value bound to a dotted config key, applied only when given.
class Overrides {
 public:
  template <typename T>
  CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app->add_option(flag, *value, help + "  [" + key + "]");
    setters_.push_back([opt, value, key](nlohmann::json& j) {
      if (opt->count()) at(j, key) = *value;
    });
    return opt;
  }

  CLI::Option* add_list(CLI::App* app, const std::string& flag, const std::string& key,
                        const std::string& help) {
    auto value = std::make_shared<std::vector<std::string>>();
    auto* opt = app->add_option(flag, *value, help + "  [" + key + "]")->delimiter(',');
    setters_.push_back([opt, value, key](nlohmann::json& j) {
      if (opt->count()) at(j, key) = *value;
    });
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    auto* opt = app->add_flag(flag, *value, help + "  [" + key + " = true]");
    setters_.push_back([opt, value, key](nlohmann::json& j) {
      if (opt->count()) at(j, key) = *value;
    });
    return opt;
  }

  // NAME=VALUE pairs under `key`, with numeric values stored as numbers.
  CLI::Option* add_pairs(CLI::App* app, const std::string& flag, const std::string& key,
                         const std::string& help) {
    auto value = std::make_shared<std::vector<std::string>>();
    auto* opt = app->add_option(flag, *value, help + "  [" + key + ".NAME]");
    setters_.push_back([opt, value, key](nlohmann::json& j) {
      if (!opt->count()) return;
      for (const auto& kv : *value) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw CLI::ValidationError(kv, "expected NAME=VALUE");
        const std::string name = kv.substr(0, eq), text = kv.substr(eq + 1);
        try {
          std::size_t used = 0;
          const double v = std::stod(text, &used);
          if (used != text.size()) throw std::invalid_argument(text);
          at(j, key)[name] = v;
        } catch (const std::exception&) {
          throw CLI::ValidationError(kv, "value is not a number");
        }
      }
    });
    return opt;
  }

  nlohmann::json build() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& s : setters_) s(j);
    return j;
  }

 private:
  static nlohmann::json& at(nlohmann::json& j, const std::string& dotted) {
    nlohmann::json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = dotted.find('.', start);
      node = &(*node)[dotted.substr(start, dot - start)];
      if (dot == std::string::npos) return *node;
      start = dot + 1;
    }
  }

  std::vector<std::function<void(nlohmann::json&)>> setters_;
};

struct Command {
  CLI::App* app = nullptr;
  Overrides overrides;
  std::string config;
};

void add_common(Command& c) {
  c.app->add_option("-c,--config", c.config, "TOML configuration file")->check(CLI::ExistingFile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"photonbench: FDTD nanophotonics simulation and optimizer benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pb_version()));
  bool print_json = false;
  app.add_flag("--json", print_json, "Print the machine-readable result instead of the summary lines");

  std::map<std::string, Command> cmds;
  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    Command& c = cmds[name];
    c.app = app.add_subcommand(name, help);
    add_common(c);
    return c;
  };

  {
    auto& c = make("fit-material", "Fit a Drude-Lorentz model to tabulated n, k data");
    c.overrides.add<std::string>(c.app, "--name", "fit.name", "Material name");
    c.overrides.add_list(c.app, "--table", "fit.tables", "Index table CSV (two tables are merged)");
    c.overrides.add<int>(c.app, "--terms", "fit.terms", "Total susceptibility terms");
    c.overrides.add<int>(c.app, "--drude", "fit.drude", "How many terms are Drude terms");
    c.overrides.add<int>(c.app, "--restarts", "fit.restarts", "Random restarts");
    c.overrides.add<double>(c.app, "--extinction-offset", "fit.extinction_offset",
                            "Constant added to k before fitting");
    c.overrides.add<double>(c.app, "--resistivity", "fit.resistivity_ohm_m", "DC resistivity (ohm m)");
    c.overrides.add<double>(c.app, "--band-gap", "fit.band_gap_ev", "Band gap (eV); default from the table");
    c.overrides.add<long long>(c.app, "--seed", "fit.seed", "Random seed");
    c.overrides.add<std::string>(c.app, "-o,--output", "output.path", "Fitted material JSON");
  }
  {
    auto& c = make("simulate", "Simulate one structure and write R/A/T spectra");
    c.overrides.add<std::string>(c.app, "--variant", "structure.variant", "Structure variant");
    c.overrides.add_pairs(c.app, "--param", "structure.params", "Geometry parameter NAME=VALUE in nm");
    c.overrides.add_list(c.app, "--materials", "structure.materials", "Material per slot");
    c.overrides.add<std::string>(c.app, "--blocks", "structure.blocks", "Block code (80 base-12 digits)");
    c.overrides.add_list(c.app, "--fidelity", "simulation.fidelities", "low, medium or high (list)");
    c.overrides.add<std::string>(c.app, "--band", "simulation.band", "single_550, visible or solar");
    c.overrides.add<int>(c.app, "--points", "simulation.points", "Wavelength samples");
    c.overrides.add_list(c.app, "--objective", "simulation.objectives", "Objectives to evaluate (list)");
    c.overrides.add_flag(c.app, "--fields", "fields.enabled", "Export field snapshots");
    c.overrides.add<long long>(c.app, "--stride", "fields.stride", "Steps between snapshots");
    c.overrides.add<std::string>(c.app, "--field-format", "fields.format", "binary or csv");
    c.overrides.add<std::string>(c.app, "--materials-dir", "materials.directory", "Fitted material directory");
    c.overrides.add<std::string>(c.app, "-o,--output-dir", "output.directory", "Output directory");
  }
  {
    auto& c = make("sweep", "Evaluate a search space into a dataset CSV");
    c.overrides.add<std::string>(c.app, "--variant", "space.variant", "Structure variant");
    c.overrides.add_flag(c.app, "--count-only", "sweep.count_only", "Print the number of grid points and exit");
    c.overrides.add<std::string>(c.app, "--objective", "sweep.objective", "Objective kind");
    c.overrides.add<std::string>(c.app, "--fidelity", "sweep.fidelity", "low, medium or high");
    c.overrides.add<long long>(c.app, "--subsample", "sweep.subsample", "Evaluate this many random points");
    c.overrides.add<long long>(c.app, "--seed", "sweep.seed", "Subsampling seed");
    c.overrides.add<int>(c.app, "--points", "sweep.points", "Wavelength samples");
    c.overrides.add<long long>(c.app, "--workers", "sweep.workers",
                               "Worker threads (default: $PHOTONBENCH_WORKERS, else all cores)");
    c.overrides.add<long long>(c.app, "--memory-limit-mb", "sweep.memory_limit_mb", "Memory budget for concurrent runs");
    c.overrides.add<std::string>(c.app, "--materials-dir", "materials.directory", "Fitted material directory");
    c.overrides.add<std::string>(c.app, "-o,--output", "output.path", "Dataset CSV");
  }
  {
    auto& c = make("train-surrogate", "Train an MLP surrogate on a dataset");
    c.overrides.add<std::string>(c.app, "--data", "data.path", "Dataset CSV (manifest alongside)");
    c.overrides.add<int>(c.app, "--max-epochs", "model.max_epochs", "Epoch limit");
    c.overrides.add<int>(c.app, "--batch-size", "model.batch_size", "Mini-batch size");
    c.overrides.add<double>(c.app, "--learning-rate", "model.learning_rate", "Adam step size");
    c.overrides.add<long long>(c.app, "--seed", "model.seed", "Initialization and shuffling seed");
    c.overrides.add<long long>(c.app, "--split-seed", "split.seed", "Train/validation/test split seed");
    c.overrides.add<std::string>(c.app, "-o,--output", "output.path", "Model JSON");
  }
  {
    auto& c = make("optimize", "Benchmark optimizers on an objective");
    c.overrides.add<std::string>(c.app, "--mode", "objective.mode", "surrogate, grid or simulation");
    c.overrides.add<std::string>(c.app, "--surrogate", "objective.surrogate", "Model JSON (surrogate mode)");
    c.overrides.add<std::string>(c.app, "--dataset", "objective.dataset", "Dataset CSV (grid mode)");
    c.overrides.add<std::string>(c.app, "--kind", "objective.kind", "Objective kind (simulation mode)");
    c.overrides.add<std::string>(c.app, "--direction", "objective.direction", "maximize or minimize");
    c.overrides.add<std::string>(c.app, "--fidelity", "objective.fidelity", "low, medium or high (simulation mode)");
    c.overrides.add_list(c.app, "--algorithms", "optimizer.algorithms", "random, powell, direct, de, bo (list)");
    c.overrides.add<long long>(c.app, "--budget", "optimizer.budget", "Evaluations per run");
    c.overrides.add<long long>(c.app, "--repeats", "optimizer.repeats", "Seeds per algorithm");
    c.overrides.add<long long>(c.app, "--seed", "optimizer.seed", "First seed");
    c.overrides.add<long long>(c.app, "--workers", "optimizer.workers",
                               "Worker threads (default: $PHOTONBENCH_WORKERS, else all cores)");
    c.overrides.add<std::string>(c.app, "-o,--output-dir", "output.directory", "Output directory");
  }
  {
    auto& c = make("report", "Summarize a benchmark or dataset as mean and standard error CSV");
    c.overrides.add<std::string>(c.app, "--manifest", "report.manifest", "Run or dataset manifest");
    c.overrides.add<std::string>(c.app, "--traces", "report.traces", "Trace CSV");
    c.overrides.add<std::string>(c.app, "-o,--output", "report.output", "Report CSV");
  }

  CLI11_PARSE(app, argc, argv);

  for (auto& [name, c] : cmds) {
    if (!c.app->parsed()) continue;
    std::string overrides;
    try {
      overrides = c.overrides.build().dump();
    } catch (const CLI::Error& e) {
      return app.exit(e);
    }
    pb_context* ctx = nullptr;
    if (pb_context_create(&ctx) != PB_OK) {
      std::cerr << "error: " << pb_last_error() << "\n";
      return 1;
    }
    char* result = nullptr;
    const pb_status st =
        pb_command_run(ctx, name.c_str(), c.config.empty() ? nullptr : c.config.c_str(), overrides.c_str(), &result);
    pb_context_destroy(ctx);
    if (st != PB_OK) {
      std::cerr << "error (" << pb_status_name(st) << "): " << pb_last_error() << "\n";
      return pb_exit_code(st);
    }
    const auto j = nlohmann::json::parse(result);
    pb_string_free(result);
    if (print_json) std::cout << j.dump(2) << "\n";
    else std::cout << j.at("message").get<std::string>() << "\n";
    return 0;
  }
  return 1;
}

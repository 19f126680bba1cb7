// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "bench/commands.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include "bench/config.hpp"
#include "bench/manifest.hpp"
#include "common/error.hpp"
#include "common/io.hpp"
#include "common/units.hpp"
#include "geometry/raster.hpp"
#include "geometry/search_space.hpp"
#include "materials/fit.hpp"
#include "materials/tabulated.hpp"
#include "optimize/benchmark.hpp"
#include "spectra/evaluate.hpp"
#include "surrogate/dataset.hpp"
#include "surrogate/mlp.hpp"

namespace photonbench {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path sidecar(const fs::path& p, const std::string& suffix) {
  return fs::path(p.string() + suffix);
}

void ensure_parent(const fs::path& p) {
  if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
}

fs::path require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) throw IoError(what + " not found: " + path);
  return path;
}

Direction parse_direction(const std::string& s) {
  if (s == "maximize" || s == "max") return Direction::Maximize;
  if (s == "minimize" || s == "min") return Direction::Minimize;
  throw ConfigError("direction must be 'maximize' or 'minimize', got '" + s + "'");
}

std::string direction_name(Direction d) { return d == Direction::Maximize ? "maximize" : "minimize"; }

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json();
}

// Reads a config value with a converter that may throw InvalidArgument and
// reports it as a config error at `where`.
template <typename F>
auto as_config(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

// Shared evaluation setup: library, spectral weights, normalization cache.
struct Evaluator {
  std::unique_ptr<MaterialLibrary> library;
  SpectralWeight am15, d65;
  NormalizationCache cache;
  EvaluationContext ctx;
};

std::unique_ptr<Evaluator> make_evaluator(ConfigSection& root, ConfigSection& run_section,
                                          Fidelity default_fidelity) {
  auto ev = std::make_unique<Evaluator>();
  auto& mat = root.section("materials");
  const auto dir = mat.string("directory", (default_data_dir() / "fitted").string());
  std::map<std::string, double> resistivity;
  const auto& rho = mat.raw("resistivity");
  if (!rho.is_null()) {
    if (!rho.is_object()) throw ConfigError("'materials.resistivity' must be a table");
    for (const auto& [k, v] : rho.items()) {
      if (!v.is_number() || !(v.get<double>() > 0.0))
        throw ConfigError("'materials.resistivity." + k + "' must be a positive number");
      resistivity[k] = v.get<double>();
    }
  }
  auto& spec = root.section("spectra");
  const auto spectra_dir = default_data_dir() / "spectra";
  const auto am15 = spec.string("am15", (spectra_dir / "am15g_irradiance.csv").string());
  const auto d65 = spec.string("d65", (spectra_dir / "d65.csv").string());

  RunConfig rc;
  rc.fidelity = as_config(run_section.path() + ".fidelity", [&] {
    return parse_fidelity(run_section.string("fidelity", fidelity_name(default_fidelity)));
  });
  rc.dx_nm = run_section.optional_number("dx_nm");
  rc.decay_ratio = run_section.number("decay_ratio", rc.decay_ratio);
  rc.max_steps = run_section.integer("max_steps", rc.max_steps);
  ev->ctx.points = static_cast<int>(run_section.integer("points", 64));
  ev->ctx.band_gap_ev = run_section.optional_number("band_gap_ev");
  ev->ctx.ignore_band_gap = run_section.boolean("ignore_band_gap", false);
  if (rc.dx_nm && !(*rc.dx_nm > 0.0)) throw ConfigError("'" + run_section.path() + ".dx_nm' must be positive");
  if (ev->ctx.points < 1) throw ConfigError("'" + run_section.path() + ".points' must be positive");

  ev->library = std::make_unique<MaterialLibrary>(dir);
  ev->am15 = read_spectral_weight(require_file(am15, "AM1.5 spectrum"));
  ev->d65 = read_spectral_weight(require_file(d65, "D65 spectrum"));
  ev->ctx.library = ev->library.get();
  ev->ctx.am15 = &ev->am15;
  ev->ctx.d65 = &ev->d65;
  ev->ctx.cache = &ev->cache;
  ev->ctx.run = rc;
  ev->ctx.resistivity = std::move(resistivity);
  return ev;
}

std::size_t max_terms(const StructureSpec& spec, const MaterialLibrary& library) {
  std::vector<std::string> names;
  if (spec.variant == Variant::CombinatorialBlocks) {
    for (int b : spec.blocks)
      if (b >= 0 && b < static_cast<int>(block_material_names().size()))
        names.push_back(block_material_names()[b]);
  } else {
    names = spec.materials.empty() ? default_materials(spec.variant) : spec.materials;
  }
  std::size_t terms = 0;
  for (const auto& n : names) {
    try {
      terms = std::max(terms, library.get(n).terms.size());
    } catch (const std::exception&) {
      terms = std::max<std::size_t>(terms, 5);  // unknown here; assume a rich fit
    }
  }
  return terms;
}

// ---------------------------------------------------------------- fit-material

CommandResult cmd_fit_material(const nlohmann::json& config) {
  ConfigSection root(&config, "");
  auto& fit = root.section("fit");
  const std::string name = fit.string("name");
  const auto tables = fit.strings("tables");
  FitConfig fc;
  fc.n_terms = static_cast<int>(fit.integer("terms", fc.n_terms));
  fc.n_drude = static_cast<int>(fit.integer("drude", fc.n_drude));
  fc.restarts = static_cast<int>(fit.integer("restarts", fc.restarts));
  fc.adam_iterations = static_cast<int>(fit.integer("iterations", fc.adam_iterations));
  fc.polish_iterations = static_cast<int>(fit.integer("polish_iterations", fc.polish_iterations));
  fc.learning_rate = fit.number("learning_rate", fc.learning_rate);
  fc.max_relative_residual = fit.number("max_relative_residual", fc.max_relative_residual);
  fc.min_wavelength_nm = fit.number("min_wavelength_nm", fc.min_wavelength_nm);
  fc.max_wavelength_nm = fit.number("max_wavelength_nm", fc.max_wavelength_nm);
  fc.seed = static_cast<std::uint64_t>(fit.integer("seed", static_cast<std::int64_t>(fc.seed)));
  const double offset = fit.number("extinction_offset", 0.0);
  const double max_gap = fit.number("merge_max_gap_nm", 50.0);
  const auto resistivity = fit.optional_number("resistivity_ohm_m");
  auto band_gap = fit.optional_number("band_gap_ev");
  const fs::path out = root.section("output").string("path");
  root.finish();

  if (tables.empty() || tables.size() > 2)
    throw ConfigError("'fit.tables' must list one table or two tables to merge");
  if (fc.n_terms < 1 || fc.n_drude < 0 || fc.n_drude > fc.n_terms)
    throw ConfigError("'fit.terms' must be positive and 'fit.drude' within [0, terms]");
  if (offset < 0.0) throw ConfigError("'fit.extinction_offset' must be non-negative");
  if (resistivity && !(*resistivity > 0.0)) throw ConfigError("'fit.resistivity_ohm_m' must be positive");

  std::vector<TabulatedIndex> loaded;
  for (const auto& t : tables) loaded.push_back(read_index_table(require_file(t, "index table")));
  TabulatedIndex table = loaded.size() == 2 ? merge_tables(loaded[0], loaded[1], max_gap) : loaded[0];
  if (!band_gap) {
    for (const auto& t : loaded) {
      auto it = t.metadata().find("band_gap_ev");
      if (it != t.metadata().end()) {
        band_gap = parse_double(it->second, tables[0] + " band_gap_ev");
        break;
      }
    }
  }
  if (offset > 0.0) table = apply_extinction_offset(table, offset);

  const auto t0 = Clock::now();
  RunManifest manifest("fit-material", config);
  FitResult r = fit_drude_lorentz(table, fc, name);
  r.material.extinction_offset = offset;
  r.material.band_gap_ev = band_gap;
  r.material.resistivity_ohm_m = resistivity;
  ensure_parent(out);
  save_material(out, r.material);

  // Residual report over the fitted samples.
  std::ostringstream csv;
  csv << "# material: " << name << "\n# residual: " << format_double(r.residual)
      << "\n# relative_residual: " << format_double(r.relative_residual)
      << "\n# extinction_offset: " << format_double(offset) << "\n";
  csv << "wavelength_nm,eps_data_re,eps_data_im,eps_model_re,eps_model_im,abs_error\n";
  for (const auto& s : table.rows()) {
    if (s.wavelength_nm < r.material.fit_min_nm || s.wavelength_nm > r.material.fit_max_nm) continue;
    const auto data = sample_permittivity(s);
    const auto model = permittivity(r.material, units::wavelength_to_omega(s.wavelength_nm));
    csv << format_double(s.wavelength_nm) << ',' << format_double(data.real()) << ','
        << format_double(data.imag()) << ',' << format_double(model.real()) << ','
        << format_double(model.imag()) << ',' << format_double(std::abs(model - data)) << '\n';
  }
  const auto residual_path = out.parent_path() / (out.stem().string() + ".residuals.csv");
  write_file_atomic(residual_path, csv.str());

  nlohmann::ordered_json s;
  s["material"] = name;
  s["output"] = out.string();
  s["residual_report"] = residual_path.string();
  s["terms"] = fc.n_terms;
  s["drude_terms"] = fc.n_drude;
  s["samples"] = r.samples;
  s["residual"] = r.residual;
  s["relative_residual"] = r.relative_residual;
  s["extinction_offset"] = offset;
  s["band_gap_ev"] = band_gap ? nlohmann::ordered_json(*band_gap) : nlohmann::ordered_json();
  s["wall_seconds"] = seconds_since(t0);
  manifest.add_task({{"task", "fit"}, {"material", name}, {"status", "ok"},
                     {"relative_residual", r.relative_residual}});
  manifest.add_file(out);
  manifest.add_file(residual_path);
  manifest.write(sidecar(out, ".run.json"));

  std::ostringstream msg;
  msg << "fitted " << name << " (" << fc.n_terms << " terms, " << r.samples
      << " samples): relative residual " << r.relative_residual << "\nwrote " << out.string();
  return {s, msg.str()};
}

// -------------------------------------------------------------------- simulate

SnapshotFormat parse_snapshot_format(const std::string& s) {
  if (s == "binary") return SnapshotFormat::Binary;
  if (s == "csv") return SnapshotFormat::Csv;
  throw ConfigError("'fields.format' must be 'binary' or 'csv', got '" + s + "'");
}

CommandResult cmd_simulate(const nlohmann::json& config) {
  ConfigSection root(&config, "");
  const auto spec = as_config("structure", [&] {
    const auto& raw = root.raw("structure");
    if (raw.is_null()) throw ConfigError("missing required table 'structure'");
    // Any library material may fill a slot here (vacuum gives an empty cell),
    // so only the geometry is checked against the published bounds.
    StructureSpec st = structure_from_json(raw);
    if (st.variant == Variant::CombinatorialBlocks) return validate(st);
    const auto errors = parameter_errors(st);
    if (!errors.empty()) {
      std::string msg = "invalid " + variant_name(st.variant) + " structure";
      for (std::size_t i = 0; i < errors.size(); ++i) msg += (i ? "; " : ": ") + errors[i];
      throw ConfigError(msg);
    }
    if (st.materials.empty()) st.materials = default_materials(st.variant);
    if (st.materials.size() != material_slots(st.variant).size())
      throw ConfigError(variant_name(st.variant) + " takes " +
                        std::to_string(material_slots(st.variant).size()) + " materials");
    return st;
  });
  auto& sim = root.section("simulation");
  const auto fidelity_names =
      sim.has("fidelities") ? sim.strings("fidelities")
                            : std::vector<std::string>{sim.string("fidelity", "medium")};
  const Band band = as_config("simulation.band", [&] { return parse_band(sim.string("band", "visible")); });
  const auto objective_names = sim.strings("objectives", std::vector<std::string>{});
  const auto memory_mb = sim.optional_integer("memory_limit_mb");
  auto& fields = root.section("fields");
  const bool want_fields = fields.boolean("enabled", false);
  const std::int64_t stride = fields.integer("stride", 100);
  const SnapshotFormat format = parse_snapshot_format(fields.string("format", "binary"));
  const fs::path out_dir = root.section("output").string("directory");
  auto ev = make_evaluator(root, sim, Fidelity::Medium);
  root.finish();

  if (stride < 1) throw ConfigError("'fields.stride' must be at least 1");
  std::vector<Fidelity> fids;
  for (const auto& f : fidelity_names)
    fids.push_back(as_config("simulation.fidelities", [&] { return parse_fidelity(f); }));
  if (fids.empty()) throw ConfigError("'simulation.fidelities' is empty");
  std::vector<ObjectiveKind> kinds;
  for (const auto& o : objective_names) {
    const auto k = as_config("simulation.objectives", [&] { return parse_objective(o); });
    if (k != ObjectiveKind::ShieldingEffectiveness && objective_band(k) != band)
      throw ConfigError("objective " + o + " needs the " + band_name(objective_band(k)) + " band");
    kinds.push_back(k);
  }

  const auto wavelengths = band_wavelengths(band, ev->ctx.points);
  const auto budget = memory_budget_bytes(memory_mb);
  fs::create_directories(out_dir);
  RunManifest manifest("simulate", config);
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  std::ostringstream msg;
  for (Fidelity f : fids) {
    RunConfig rc = ev->ctx.run;
    rc.fidelity = f;
    const std::string fname = fidelity_name(f);
    // Frame count is bounded by the step limit; estimate from a typical run.
    const std::int64_t frames = want_fields ? std::min<std::int64_t>(rc.max_steps / stride + 1, 4096) : 0;
    capped_workers(1, estimate_run_bytes(spec, *ev->library, rc, wavelengths.size(), frames), budget);

    const fs::path snap_path = out_dir / ("fields_" + fname + (format == SnapshotFormat::Binary ? ".pbsnap" : ".csv"));
    const auto t0 = Clock::now();
    SimulationResult res = simulate_layout(
        layout(spec), *ev->library, wavelengths, rc, &ev->cache,
        [&](SimulationRun& run) {
          if (want_fields) run.enable_snapshots(stride);
        },
        [&](const SimulationRun& run) {
          if (want_fields) export_snapshots(run, snap_path, format);
        });
    const double wall = seconds_since(t0);

    EvaluationContext ctx = ev->ctx;
    ctx.run = rc;
    nlohmann::ordered_json objectives = nlohmann::ordered_json::object();
    for (auto k : kinds) {
      nlohmann::ordered_json o;
      o["value"] = objective_from_spectra(k, res.spectra, spec, ctx);
      o["units"] = objective_units(k);
      objectives[objective_name(k)] = o;
    }
    const fs::path csv_path = out_dir / ("spectra_" + fname + ".csv");
    const fs::path json_path = out_dir / ("spectra_" + fname + ".json");
    write_file_atomic(csv_path, format_rat_csv(res.spectra));
    nlohmann::ordered_json meta = rat_metadata(res.spectra);
    meta["band"] = band_name(band);
    meta["structure"] = structure_to_json(spec);
    meta["steps"] = res.steps;
    meta["warnings"] = res.warnings;
    meta["objectives"] = objectives;
    meta["wall_seconds"] = wall;
    write_file_atomic(json_path, meta.dump(2) + "\n");
    manifest.add_file(csv_path);
    manifest.add_file(json_path);
    if (want_fields) manifest.add_file(snap_path);

    nlohmann::ordered_json task;
    task["task"] = "simulate";
    task["fidelity"] = fname;
    task["status"] = "ok";
    task["steps"] = res.steps;
    task["flags"] = res.spectra.flags.size();
    task["wall_seconds"] = wall;
    manifest.add_task(task);
    nlohmann::ordered_json run = task;
    run["spectra"] = csv_path.string();
    run["objectives"] = objectives;
    if (want_fields) run["fields"] = snap_path.string();
    runs.push_back(run);
    msg << fname << ": " << res.steps << " steps, " << wall << " s -> " << csv_path.string() << "\n";
    for (const auto& [k, v] : objectives.items()) msg << "  " << k << " = " << v["value"].get<double>() << "\n";
  }
  manifest.write(out_dir / "manifest.json");
  nlohmann::ordered_json s;
  s["structure"] = structure_to_json(spec);
  s["band"] = band_name(band);
  s["runs"] = runs;
  std::string text = msg.str();
  if (!text.empty()) text.pop_back();
  return {s, text};
}

// ----------------------------------------------------------------------- sweep

CommandResult cmd_sweep(const nlohmann::json& config) {
  ConfigSection root(&config, "");
  const auto& space_raw = root.raw("space");
  auto& sw = root.section("sweep");
  const bool count_only = sw.boolean("count_only", false);
  const auto objective = sw.optional_string("objective");
  const auto subsample = sw.optional_integer("subsample");
  const std::int64_t seed = sw.integer("seed", 0);
  const auto workers_cfg = sw.optional_integer("workers");
  const auto memory_mb = sw.optional_integer("memory_limit_mb");
  auto out = root.section("output").optional_string("path");

  if (space_raw.is_null()) throw ConfigError("missing required table 'space'");
  if (count_only) {
    // Only the grid is needed; the remaining sections must still be valid keys.
    if (space_raw.is_object() && space_raw.value("variant", "") == variant_name(Variant::CombinatorialBlocks)) {
      nlohmann::ordered_json s;
      s["variant"] = variant_name(Variant::CombinatorialBlocks);
      s["count"] = nullptr;
      s["count_expression"] = std::to_string(block_material_names().size()) + "^" + std::to_string(kBlockCount);
      root.section("materials");
      root.section("spectra");
      return {s, s["count_expression"].get<std::string>()};
    }
  }
  const SearchSpace space = search_space_from_json(space_raw);
  if (count_only) {
    // Accept (and ignore) the evaluation settings so one config serves both uses.
    make_evaluator(root, sw, Fidelity::Medium);
    root.finish();
    nlohmann::ordered_json s;
    s["variant"] = variant_name(space.variant);
    s["count"] = space.count();
    s["parameter_points"] = space.parameter_count();
    s["material_combinations"] = space.material_combinations();
    return {s, std::to_string(space.count())};
  }
  auto ev = make_evaluator(root, sw, Fidelity::Medium);
  root.finish();
  if (!objective) throw ConfigError("missing required key 'sweep.objective'");
  if (!out) throw ConfigError("missing required key 'output.path'");
  if (subsample && *subsample < 1) throw ConfigError("'sweep.subsample' must be positive");
  const ObjectiveKind kind = as_config("sweep.objective", [&] { return parse_objective(*objective); });

  DatasetOptions opts;
  opts.fidelity = ev->ctx.run.fidelity;
  opts.objective = kind;
  if (subsample) opts.subsample = static_cast<std::uint64_t>(*subsample);
  opts.seed = static_cast<std::uint64_t>(seed);
  opts.workers = resolve_workers(workers_cfg);
  if (kind != ObjectiveKind::ShieldingEffectiveness) {
    const auto largest = space.at(space.count() - 1);
    const auto wl = objective_band(kind) == Band::Single550 ? 1 : ev->ctx.points;
    opts.workers = capped_workers(
        opts.workers,
        estimate_run_bytes(largest, *ev->library, ev->ctx.run, static_cast<std::size_t>(wl)),
        memory_budget_bytes(memory_mb));
  }

  const EvaluationContext& ctx = ev->ctx;
  const auto t0 = Clock::now();
  RunManifest manifest("sweep", config);
  const fs::path out_path = *out;
  const DatasetReport rep = generate_dataset(
      space,
      [&](std::uint64_t, const StructureSpec& spec) { return evaluate_structure(kind, spec, ctx).value; },
      opts, out_path);
  const double wall = seconds_since(t0);

  nlohmann::ordered_json s;
  s["variant"] = variant_name(space.variant);
  s["objective"] = objective_name(kind);
  s["fidelity"] = fidelity_name(opts.fidelity);
  s["selected"] = rep.selected;
  s["evaluated"] = rep.evaluated;
  s["resumed"] = rep.resumed;
  s["failures"] = rep.failures.size();
  s["complete"] = rep.complete;
  s["workers"] = opts.workers;
  s["output"] = out_path.string();
  s["wall_seconds"] = wall;
  nlohmann::ordered_json task = s;
  task["task"] = "sweep";
  task["status"] = rep.complete ? "complete" : "partial";
  manifest.add_task(task);
  if (rep.complete) {
    manifest.add_file(out_path);
    manifest.add_file(sidecar(out_path, ".manifest.json"));
  }
  manifest.write(sidecar(out_path, ".run.json"));
  std::ostringstream msg;
  msg << rep.selected << " configurations (" << rep.evaluated << " evaluated, " << rep.resumed
      << " resumed, " << rep.failures.size() << " failed) -> " << out_path.string();
  return {s, msg.str()};
}

// ------------------------------------------------------------- train-surrogate

struct DatasetWithSpace {
  SearchSpace space;
  ObjectiveKind kind;
  std::vector<DatasetRow> rows;
};

DatasetWithSpace load_dataset(const std::string& path, const std::optional<std::string>& manifest_path) {
  const fs::path csv = require_file(path, "dataset");
  const fs::path mpath = manifest_path ? fs::path(*manifest_path) : sidecar(csv, ".manifest.json");
  require_file(mpath.string(), "dataset manifest");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(mpath));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(mpath.string() + ": " + e.what());
  }
  if (!m.contains("space") || !m.contains("objective_kind"))
    throw IoError(mpath.string() + ": not a dataset manifest");
  DatasetWithSpace d{search_space_from_json(m["space"]),
                     parse_objective(m["objective_kind"].get<std::string>()), read_dataset(csv)};
  return d;
}

CommandResult cmd_train_surrogate(const nlohmann::json& config) {
  ConfigSection root(&config, "");
  auto& data = root.section("data");
  const auto data_path = data.string("path");
  const auto manifest_path = data.optional_string("manifest");
  auto& split = root.section("split");
  SplitSpec sp;
  sp.train = split.number("train", sp.train);
  sp.validation = split.number("validation", sp.validation);
  sp.test = split.number("test", sp.test);
  sp.seed = static_cast<std::uint64_t>(split.integer("seed", 0));
  auto& model = root.section("model");
  MlpConfig mc;
  mc.hidden1 = static_cast<int>(model.integer("hidden1", mc.hidden1));
  mc.hidden2 = static_cast<int>(model.integer("hidden2", mc.hidden2));
  mc.max_epochs = static_cast<int>(model.integer("max_epochs", mc.max_epochs));
  mc.batch_size = static_cast<int>(model.integer("batch_size", mc.batch_size));
  mc.learning_rate = model.number("learning_rate", mc.learning_rate);
  mc.stop_window = static_cast<int>(model.integer("stop_window", mc.stop_window));
  mc.seed = static_cast<std::uint64_t>(model.integer("seed", static_cast<std::int64_t>(mc.seed)));
  const fs::path out = root.section("output").string("path");
  root.finish();
  if (mc.hidden1 < 1 || mc.hidden2 < 1) throw ConfigError("hidden layer widths must be positive");
  if (mc.stop_window < 1) throw ConfigError("'model.stop_window' must be positive");

  const auto t0 = Clock::now();
  RunManifest manifest("train-surrogate", config);
  const auto d = load_dataset(data_path, manifest_path);
  std::vector<DatasetRow> ok;
  for (const auto& r : d.rows)
    if (!r.failed()) ok.push_back(r);
  const Split parts = as_config("split", [&] { return split_rows(ok.size(), sp); });
  const auto train = training_set(d.space, ok, parts.train);
  const auto val = training_set(d.space, ok, parts.validation);
  const auto test = training_set(d.space, ok, parts.test);
  const auto inputs = surrogate_inputs(d.space);
  const MlpSurrogate m = train_mlp(train, val, inputs.names, inputs.lower, inputs.upper, mc);

  auto j = m.to_json();
  j["objective_kind"] = objective_name(d.kind);
  j["space"] = search_space_to_json(d.space);
  ensure_parent(out);
  write_file_atomic(out, j.dump(2) + "\n");

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.parameter_hash()));
  nlohmann::ordered_json s;
  s["output"] = out.string();
  s["objective"] = objective_name(d.kind);
  s["rows"] = d.rows.size();
  s["failed_rows_skipped"] = d.rows.size() - ok.size();
  s["train_rows"] = parts.train.size();
  s["validation_rows"] = parts.validation.size();
  s["test_rows"] = parts.test.size();
  s["train_mse"] = m.mse(train);
  s["validation_mse"] = m.mse(val);
  s["test_mse"] = test.rows() > 0 ? nlohmann::ordered_json(m.mse(test)) : nlohmann::ordered_json();
  s["epochs_run"] = m.record().epochs_run;
  s["best_epoch"] = m.record().best_epoch;
  s["stopped_early"] = m.record().stopped_early;
  s["parameter_hash"] = hash;
  s["wall_seconds"] = seconds_since(t0);
  nlohmann::ordered_json task = s;
  task["task"] = "train";
  task["status"] = "ok";
  manifest.add_task(task);
  manifest.add_file(out);
  manifest.write(sidecar(out, ".run.json"));
  std::ostringstream msg;
  msg << "trained on " << parts.train.size() << " rows for " << m.record().epochs_run
      << " epochs (best " << m.record().best_epoch << "); validation MSE " << s["validation_mse"].get<double>();
  if (test.rows() > 0) msg << ", test MSE " << s["test_mse"].get<double>();
  msg << "\nwrote " << out.string();
  return {s, msg.str()};
}

// -------------------------------------------------------------------- optimize

CommandResult cmd_optimize(const nlohmann::json& config) {
  ConfigSection root(&config, "");
  auto& obj = root.section("objective");
  const EvaluationMode mode = as_config("objective.mode", [&] { return parse_mode(obj.string("mode")); });
  const auto surrogate_path = obj.optional_string("surrogate");
  const auto dataset_path = obj.optional_string("dataset");
  const auto dataset_manifest = obj.optional_string("dataset_manifest");
  const auto direction_cfg = obj.optional_string("direction");
  const auto kind_cfg = obj.optional_string("kind");
  const std::int64_t combo = obj.integer("combo", 0);
  const auto memory_mb = obj.optional_integer("memory_limit_mb");
  const auto& space_raw = root.raw("space");
  auto& opt = root.section("optimizer");
  const auto algorithms = opt.strings("algorithms");
  const std::int64_t budget = opt.integer("budget", 200);
  const std::int64_t repeats = opt.integer("repeats", 1);
  const std::int64_t seed0 = opt.integer("seed", 0);
  const auto& seeds_raw = opt.raw("seeds");
  const auto workers_cfg = opt.optional_integer("workers");
  const fs::path out_dir = root.section("output").string("directory");
  std::unique_ptr<Evaluator> ev;
  if (mode == EvaluationMode::Simulation) ev = make_evaluator(root, obj, Fidelity::Medium);
  root.finish();

  if (budget < 1) throw ConfigError("'optimizer.budget' must be at least 1");
  if (combo < 0) throw ConfigError("'objective.combo' must be non-negative");
  std::vector<std::uint64_t> seeds;
  if (!seeds_raw.is_null()) {
    if (!seeds_raw.is_array() || seeds_raw.empty()) throw ConfigError("'optimizer.seeds' must be a non-empty list");
    for (const auto& s : seeds_raw) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
        throw ConfigError("'optimizer.seeds' must hold non-negative integers");
      seeds.push_back(s.get<std::uint64_t>());
    }
  } else {
    if (repeats < 1) throw ConfigError("'optimizer.repeats' must be at least 1");
    for (std::int64_t r = 0; r < repeats; ++r) seeds.push_back(static_cast<std::uint64_t>(seed0 + r));
  }
  for (const auto& a : algorithms)
    if (std::find(algorithm_names().begin(), algorithm_names().end(), a) == algorithm_names().end())
      throw ConfigError("unknown algorithm '" + a + "' (expected random, powell, direct, de or bo)");
  if (algorithms.empty()) throw ConfigError("'optimizer.algorithms' is empty");

  std::optional<Direction> direction;
  if (direction_cfg) direction = parse_direction(*direction_cfg);
  int workers = resolve_workers(workers_cfg);
  std::optional<ObjectiveHandle> handle;
  nlohmann::ordered_json source;
  source["mode"] = mode_name(mode);

  if (mode == EvaluationMode::Surrogate) {
    if (!surrogate_path) throw ConfigError("surrogate mode needs 'objective.surrogate'");
    const fs::path p = require_file(*surrogate_path, "surrogate model");
    const auto j = nlohmann::json::parse(read_text_file(p));
    auto model = std::make_shared<const MlpSurrogate>(MlpSurrogate::from_json(j));
    if (!direction) {
      direction = Direction::Maximize;
      if (j.contains("objective_kind"))
        direction = objective_maximized(parse_objective(j["objective_kind"].get<std::string>()))
                        ? Direction::Maximize
                        : Direction::Minimize;
    }
    handle = ObjectiveHandle::surrogate(model, *direction);
    source["surrogate"] = p.string();
  } else if (mode == EvaluationMode::GridLookup) {
    if (!dataset_path) throw ConfigError("grid mode needs 'objective.dataset'");
    const auto d = load_dataset(*dataset_path, dataset_manifest);
    std::vector<double> values(d.space.count(), std::nan(""));
    for (const auto& r : d.rows)
      if (r.index < values.size()) values[r.index] = r.value;
    if (!direction) direction = objective_maximized(d.kind) ? Direction::Maximize : Direction::Minimize;
    handle = ObjectiveHandle::grid_lookup(d.space, std::move(values), *direction,
                                          static_cast<std::uint64_t>(combo));
    source["dataset"] = *dataset_path;
    source["objective"] = objective_name(d.kind);
  } else if (mode == EvaluationMode::Simulation) {
    if (!kind_cfg) throw ConfigError("simulation mode needs 'objective.kind'");
    const ObjectiveKind kind = as_config("objective.kind", [&] { return parse_objective(*kind_cfg); });
    if (!direction) direction = objective_maximized(kind) ? Direction::Maximize : Direction::Minimize;
    if (space_raw.is_null()) throw ConfigError("simulation mode needs a 'space' table");
    const EvaluationContext* ctx = &ev->ctx;
    const auto budget_bytes = memory_budget_bytes(memory_mb);
    const std::size_t wl = objective_band(kind) == Band::Single550 ? 1 : static_cast<std::size_t>(ctx->points);
    if (space_raw.is_object() && space_raw.value("variant", "") == variant_name(Variant::CombinatorialBlocks)) {
      if (space_raw.size() != 1) throw ConfigError("the material-block space takes no keys besides 'variant'");
      StructureSpec probe;
      probe.variant = Variant::CombinatorialBlocks;
      probe.blocks.assign(kBlockCount, 0);
      workers = capped_workers(workers, estimate_run_bytes(probe, *ev->library, ctx->run, wl), budget_bytes);
      handle = ObjectiveHandle::blocks(
          kBlockCount, static_cast<int>(block_material_names().size()),
          [ctx, kind](const std::vector<int>& b) {
            StructureSpec s;
            s.variant = Variant::CombinatorialBlocks;
            s.blocks = b;
            return evaluate_structure(kind, s, *ctx).value;
          },
          *direction);
    } else {
      const SearchSpace space = search_space_from_json(space_raw);
      workers = capped_workers(
          workers, estimate_run_bytes(space.at(space.count() - 1), *ev->library, ctx->run, wl),
          budget_bytes);
      handle = ObjectiveHandle::simulation(
          space, [ctx, kind](const StructureSpec& s) { return evaluate_structure(kind, s, *ctx).value; },
          *direction, static_cast<std::uint64_t>(combo));
    }
    source["objective"] = objective_name(kind);
    source["fidelity"] = fidelity_name(ctx->run.fidelity);
  } else {
    throw ConfigError("unsupported evaluation mode");
  }

  BenchmarkOptions bo;
  bo.algorithms = algorithms;
  bo.budget = static_cast<int>(budget);
  bo.seeds = seeds;
  bo.workers = workers;
  const auto t0 = Clock::now();
  RunManifest manifest("optimize", config);
  const BenchmarkReport rep = run_benchmark(*handle, bo);
  const double wall = seconds_since(t0);

  fs::create_directories(out_dir);
  const auto traces_path = out_dir / "traces.csv";
  const auto summary_csv = out_dir / "summary.csv";
  const auto summary_json = out_dir / "summary.json";
  write_file_atomic(traces_path, traces_csv(rep.traces));
  write_file_atomic(summary_csv, curves_csv(rep.curves));
  nlohmann::ordered_json sj = curves_json(rep.curves, rep.budget, rep.direction);
  sj["source"] = source;
  nlohmann::ordered_json best = nlohmann::ordered_json::array();
  for (const auto& t : rep.traces) {
    nlohmann::ordered_json b;
    b["algorithm"] = t.algorithm;
    b["seed"] = t.seed;
    b["evaluations"] = t.size();
    b["best"] = number_or_null(t.best());
    b["point"] = t.best_point();
    best.push_back(b);
    manifest.add_task({{"task", "optimize"}, {"algorithm", t.algorithm}, {"seed", t.seed},
                       {"status", "ok"}, {"evaluations", t.size()}});
  }
  sj["best"] = best;
  write_file_atomic(summary_json, sj.dump(2) + "\n");
  manifest.add_file(traces_path);
  manifest.add_file(summary_csv);
  manifest.add_file(summary_json);
  manifest.write(out_dir / "manifest.json");

  nlohmann::ordered_json s;
  s["direction"] = direction_name(rep.direction);
  s["budget"] = rep.budget;
  s["repeats"] = seeds.size();
  s["workers"] = workers;
  s["source"] = source;
  s["output"] = out_dir.string();
  s["wall_seconds"] = wall;
  nlohmann::ordered_json finals = nlohmann::ordered_json::object();
  std::ostringstream msg;
  msg << direction_name(rep.direction) << ", budget " << rep.budget << ", " << seeds.size() << " repeat(s)";
  for (const auto& c : rep.curves) {
    const auto& last = c.points.back();
    finals[c.algorithm] = {{"mean_best", number_or_null(last.mean)}, {"se_best", number_or_null(last.se)}};
    msg << "\n  " << c.algorithm << ": " << last.mean << " +/- " << last.se;
  }
  s["final"] = finals;
  msg << "\nwrote " << out_dir.string();
  return {s, msg.str()};
}

// ---------------------------------------------------------------------- report

CommandResult report_traces(const fs::path& traces_path, const fs::path& out) {
  const auto traces = parse_traces_csv(read_text_file(traces_path), traces_path.string());
  if (traces.empty()) throw IoError(traces_path.string() + ": no traces");
  int budget = 0;
  for (const auto& t : traces) budget = std::max(budget, static_cast<int>(t.size()));
  const auto curves = summarize(traces, budget);
  write_file_atomic(out, curves_csv(curves));
  nlohmann::ordered_json s;
  s["kind"] = "benchmark";
  s["traces"] = traces_path.string();
  s["output"] = out.string();
  s["direction"] = direction_name(traces.front().direction);
  s["budget"] = budget;
  nlohmann::ordered_json finals = nlohmann::ordered_json::object();
  std::ostringstream msg;
  for (const auto& c : curves) {
    const auto& last = c.points.back();
    finals[c.algorithm] = {{"mean_best", number_or_null(last.mean)}, {"se_best", number_or_null(last.se)},
                           {"repeats", last.count}};
    msg << c.algorithm << ": " << last.mean << " +/- " << last.se << "\n";
  }
  s["final"] = finals;
  msg << "wrote " << out.string();
  return {s, msg.str()};
}

CommandResult report_dataset(const fs::path& manifest_path, const nlohmann::json& m, const fs::path& out) {
  fs::path csv = manifest_path;
  const std::string suffix = ".manifest.json";
  const std::string ms = manifest_path.string();
  if (ms.size() > suffix.size() && ms.compare(ms.size() - suffix.size(), suffix.size(), suffix) == 0)
    csv = ms.substr(0, ms.size() - suffix.size());
  else
    throw IoError(ms + ": dataset manifests are named <dataset>.manifest.json");
  const auto d = load_dataset(csv.string(), manifest_path.string());
  const bool maximize = objective_maximized(d.kind);
  std::size_t ok = 0;
  double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const DatasetRow* best = nullptr;
  for (const auto& r : d.rows) {
    if (r.failed()) continue;
    ++ok;
    sum += r.value;
    lo = std::min(lo, r.value);
    hi = std::max(hi, r.value);
    if (!best || (maximize ? r.value > best->value : r.value < best->value)) best = &r;
  }
  std::ostringstream csvout;
  csvout << "statistic,value\n";
  csvout << "rows," << d.rows.size() << "\nfailed," << d.rows.size() - ok << "\n";
  if (best) {
    csvout << "min," << format_double(lo) << "\nmax," << format_double(hi) << "\nmean,"
           << format_double(sum / static_cast<double>(ok)) << "\nbest_index," << best->index << "\nbest_value,"
           << format_double(best->value) << "\n";
    for (std::size_t i = 0; i < d.space.params.size(); ++i)
      csvout << "best_" << d.space.params[i].name << ',' << format_double(best->params[i]) << "\n";
  }
  write_file_atomic(out, csvout.str());
  nlohmann::ordered_json s;
  s["kind"] = "dataset";
  s["objective"] = m.value("objective_kind", "");
  s["rows"] = d.rows.size();
  s["failed"] = d.rows.size() - ok;
  s["best_index"] = best ? nlohmann::ordered_json(best->index) : nlohmann::ordered_json();
  s["best_value"] = best ? nlohmann::ordered_json(best->value) : nlohmann::ordered_json();
  s["output"] = out.string();
  return {s, "wrote " + out.string()};
}

CommandResult cmd_report(const nlohmann::json& config) {
  ConfigSection root(&config, "");
  auto& rep = root.section("report");
  const auto manifest = rep.optional_string("manifest");
  const auto traces = rep.optional_string("traces");
  const auto output = rep.optional_string("output");
  root.finish();
  if (manifest.has_value() == traces.has_value())
    throw ConfigError("report needs exactly one of 'report.manifest' and 'report.traces'");
  if (traces) {
    const fs::path tp = require_file(*traces, "traces file");
    const fs::path out = output ? fs::path(*output) : tp.parent_path() / "report.csv";
    ensure_parent(out);
    return report_traces(tp, out);
  }
  const fs::path mp = require_file(*manifest, "manifest");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(mp));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(mp.string() + ": " + e.what());
  }
  if (m.value("format", "") == "photonbench-run-1") {
    if (m.value("command", "") != "optimize")
      throw ConfigError(mp.string() + ": reports cover optimize runs and datasets, not " +
                        m.value("command", std::string("unknown")) + " runs");
    fs::path tp;
    for (const auto& f : m.at("files"))
      if (fs::path(f.at("path").get<std::string>()).filename() == "traces.csv")
        tp = mp.parent_path() / f.at("path").get<std::string>();
    if (tp.empty()) throw IoError(mp.string() + ": manifest lists no traces.csv");
    require_file(tp.string(), "traces file");
    const fs::path out = output ? fs::path(*output) : mp.parent_path() / "report.csv";
    ensure_parent(out);
    return report_traces(tp, out);
  }
  const fs::path out = output ? fs::path(*output) : mp.parent_path() / "report.csv";
  ensure_parent(out);
  return report_dataset(mp, m, out);
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"fit-material", "simulate", "sweep",
                                                 "train-surrogate", "optimize", "report"};
  return names;
}

CommandResult run_command(const std::string& command, const nlohmann::json& config) {
  if (!config.is_object()) throw ConfigError("config must be a table");
  if (command == "fit-material") return cmd_fit_material(config);
  if (command == "simulate") return cmd_simulate(config);
  if (command == "sweep") return cmd_sweep(config);
  if (command == "train-surrogate") return cmd_train_surrogate(config);
  if (command == "optimize") return cmd_optimize(config);
  if (command == "report") return cmd_report(config);
  throw InvalidArgument("unknown command '" + command + "'");
}

int exit_code_for(const std::exception& e) {
  if (const auto* pe = dynamic_cast<const Error*>(&e)) {
    switch (pe->kind()) {
      case ErrorKind::Config:
      case ErrorKind::InvalidArgument:
        return 2;
      case ErrorKind::Divergence:
        return 3;
      case ErrorKind::ResourceCap:
        return 4;
      default:
        return 1;
    }
  }
  return 1;
}

int resolve_workers(std::optional<std::int64_t> configured) {
  if (configured) {
    if (*configured < 1) throw ConfigError("worker count must be at least 1");
    return static_cast<int>(*configured);
  }
  if (const char* env = std::getenv("PHOTONBENCH_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError(std::string("PHOTONBENCH_WORKERS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::uint64_t estimate_run_bytes(const StructureSpec& spec, const MaterialLibrary& library,
                                 const RunConfig& config, std::size_t wavelengths,
                                 std::int64_t snapshot_frames) {
  const SimulationCell cell = cell_size(spec);
  const double dx = config.dx();
  const auto nx = static_cast<std::uint64_t>(std::ceil(cell.width / dx));
  const auto ny = static_cast<std::uint64_t>(std::ceil(cell.height / dx)) + 1;
  const std::uint64_t cells = nx * ny;
  // Ez, Dz, Hx, Hy, 1/eps, split Dzy and the material index per cell; two
  // polarization arrays and an index per dispersive term, assuming every cell
  // is dispersive.
  const std::uint64_t per_cell = 7 * sizeof(double) + max_terms(spec, library) * 2 * sizeof(double) + 8;
  // Two monitors with Ez and Hx spectra.
  const std::uint64_t monitors = 2 * 2 * wavelengths * nx * sizeof(std::complex<double>);
  const std::uint64_t snapshots = static_cast<std::uint64_t>(std::max<std::int64_t>(snapshot_frames, 0)) * 3 * cells * sizeof(float);
  const std::uint64_t normalization = cells * 7 * sizeof(double) + monitors;
  return cells * per_cell + monitors + snapshots + normalization;
}

std::uint64_t memory_budget_bytes(std::optional<std::int64_t> configured_mb) {
  constexpr std::uint64_t MiB = 1024ull * 1024ull;
  if (configured_mb) {
    if (*configured_mb < 1) throw ConfigError("memory limit must be at least 1 MiB");
    return static_cast<std::uint64_t>(*configured_mb) * MiB;
  }
  if (const char* env = std::getenv("PHOTONBENCH_MEMORY_LIMIT_MB"); env && *env) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (*end != '\0' || v < 1)
      throw ConfigError(std::string("PHOTONBENCH_MEMORY_LIMIT_MB must be a positive integer, got '") + env + "'");
    return static_cast<std::uint64_t>(v) * MiB;
  }
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long page = sysconf(_SC_PAGE_SIZE);
  if (pages > 0 && page > 0) return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page) / 2;
  return 4096 * MiB;
}

int capped_workers(int workers, std::uint64_t run_bytes, std::uint64_t budget_bytes) {
  if (run_bytes > budget_bytes) {
    std::ostringstream msg;
    msg << "one simulation needs about " << run_bytes / (1024 * 1024) << " MiB but the memory limit is "
        << budget_bytes / (1024 * 1024) << " MiB";
    throw ResourceCapError(msg.str());
  }
  const std::uint64_t fit = run_bytes == 0 ? static_cast<std::uint64_t>(workers) : budget_bytes / run_bytes;
  return static_cast<int>(std::clamp<std::uint64_t>(fit, 1, static_cast<std::uint64_t>(std::max(workers, 1))));
}

}  // namespace photonbench

// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "photonbench/photonbench.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bench/commands.hpp"
#include "bench/config.hpp"
#include "common/error.hpp"
#include "common/units.hpp"
#include "geometry/search_space.hpp"
#include "materials/material.hpp"
#include "spectra/objectives.hpp"
#include "surrogate/mlp.hpp"

struct pb_context {
  pb_log_fn log = nullptr;
  void* log_user = nullptr;
};

struct pb_material {
  photonbench::DispersiveMaterial material;
};

struct pb_surrogate {
  photonbench::MlpSurrogate model;
};

namespace {

thread_local std::string last_error;

pb_status fail(pb_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

pb_status status_for(photonbench::ErrorKind k) {
  using photonbench::ErrorKind;
  switch (k) {
    case ErrorKind::InvalidArgument: return PB_ERR_INVALID_ARGUMENT;
    case ErrorKind::Config: return PB_ERR_CONFIG;
    case ErrorKind::Io: return PB_ERR_IO;
    case ErrorKind::Divergence: return PB_ERR_DIVERGENCE;
    case ErrorKind::Timeout: return PB_ERR_TIMEOUT;
    case ErrorKind::ResourceCap: return PB_ERR_RESOURCE_CAP;
    case ErrorKind::NotConverged: return PB_ERR_NOT_CONVERGED;
    case ErrorKind::Training: return PB_ERR_TRAINING;
  }
  return PB_ERR_INTERNAL;
}

// Runs `f`, translating exceptions into a status and the thread-local message.
template <typename F>
pb_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return PB_OK;
  } catch (const photonbench::Error& e) {
    return fail(status_for(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(PB_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PB_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PB_ERR_INTERNAL, "unknown error");
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define PB_REQUIRE(cond, msg) \
  if (!(cond)) return fail(PB_ERR_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

const char* pb_version(void) { return PHOTONBENCH_VERSION; }

const char* pb_status_name(pb_status status) {
  switch (status) {
    case PB_OK: return "ok";
    case PB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PB_ERR_CONFIG: return "config error";
    case PB_ERR_IO: return "i/o error";
    case PB_ERR_DIVERGENCE: return "simulation diverged";
    case PB_ERR_TIMEOUT: return "simulation timed out";
    case PB_ERR_RESOURCE_CAP: return "resource cap exceeded";
    case PB_ERR_NOT_CONVERGED: return "not converged";
    case PB_ERR_TRAINING: return "training failed";
    case PB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* pb_last_error(void) { return last_error.c_str(); }

int pb_exit_code(pb_status status) {
  switch (status) {
    case PB_OK: return 0;
    case PB_ERR_CONFIG:
    case PB_ERR_INVALID_ARGUMENT: return 2;
    case PB_ERR_DIVERGENCE: return 3;
    case PB_ERR_RESOURCE_CAP: return 4;
    default: return 1;
  }
}

void pb_string_free(char* s) { std::free(s); }

pb_status pb_context_create(pb_context** out) {
  PB_REQUIRE(out, "pb_context_create: out is NULL");
  return guarded([&] { *out = new pb_context(); });
}

void pb_context_destroy(pb_context* ctx) { delete ctx; }

pb_status pb_context_set_log(pb_context* ctx, pb_log_fn fn, void* user) {
  PB_REQUIRE(ctx, "pb_context_set_log: ctx is NULL");
  ctx->log = fn;
  ctx->log_user = user;
  return PB_OK;
}

const char* pb_command_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : photonbench::command_names()) s += n + "\n";
    return s;
  }();
  return names.c_str();
}

pb_status pb_command_run(pb_context* ctx, const char* command, const char* config_path,
                         const char* overrides_json, char** result_json) {
  PB_REQUIRE(ctx, "pb_command_run: ctx is NULL");
  PB_REQUIRE(command, "pb_command_run: command is NULL");
  PB_REQUIRE(result_json, "pb_command_run: result_json is NULL");
  *result_json = nullptr;
  return guarded([&] {
    nlohmann::json config = nlohmann::json::object();
    if (config_path) config = photonbench::load_toml(config_path);
    if (overrides_json && *overrides_json) {
      nlohmann::json overrides;
      try {
        overrides = nlohmann::json::parse(overrides_json);
      } catch (const nlohmann::json::exception& e) {
        throw photonbench::ConfigError(std::string("malformed overrides: ") + e.what());
      }
      if (!overrides.is_object()) throw photonbench::ConfigError("overrides must be a JSON object");
      photonbench::merge_config(config, overrides);
    }
    const auto result = photonbench::run_command(command, config);
    if (ctx->log) {
      std::istringstream lines(result.message);
      for (std::string line; std::getline(lines, line);) ctx->log(line.c_str(), ctx->log_user);
    }
    nlohmann::ordered_json j;
    j["command"] = command;
    j["summary"] = result.summary;
    j["message"] = result.message;
    *result_json = copy_string(j.dump());
  });
}

pb_status pb_search_space_count(const char* space_json, uint64_t* count) {
  PB_REQUIRE(space_json && count, "pb_search_space_count: NULL argument");
  return guarded([&] {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(space_json);
    } catch (const nlohmann::json::exception& e) {
      throw photonbench::ConfigError(std::string("malformed search space: ") + e.what());
    }
    *count = photonbench::search_space_from_json(j).count();
  });
}

pb_status pb_material_load(const char* path, pb_material** out) {
  PB_REQUIRE(path && out, "pb_material_load: NULL argument");
  return guarded([&] {
    auto m = std::make_unique<pb_material>();
    m->material = photonbench::load_material(path);
    *out = m.release();
  });
}

void pb_material_free(pb_material* m) { delete m; }

pb_status pb_material_permittivity(const pb_material* m, double wavelength_nm, double* re, double* im) {
  PB_REQUIRE(m && re && im, "pb_material_permittivity: NULL argument");
  PB_REQUIRE(wavelength_nm > 0.0, "pb_material_permittivity: wavelength must be positive");
  return guarded([&] {
    const auto eps = photonbench::permittivity(m->material, photonbench::units::wavelength_to_omega(wavelength_nm));
    *re = eps.real();
    *im = eps.imag();
  });
}

pb_status pb_surrogate_load(const char* path, pb_surrogate** out) {
  PB_REQUIRE(path && out, "pb_surrogate_load: NULL argument");
  return guarded([&] {
    auto s = std::make_unique<pb_surrogate>();
    s->model = photonbench::MlpSurrogate::load(path);
    *out = s.release();
  });
}

void pb_surrogate_free(pb_surrogate* s) { delete s; }

size_t pb_surrogate_input_dim(const pb_surrogate* s) {
  return s ? static_cast<size_t>(s->model.input_dim()) : 0;
}

pb_status pb_surrogate_predict(const pb_surrogate* s, const double* x, size_t rows, double* out) {
  PB_REQUIRE(s && (rows == 0 || (x && out)), "pb_surrogate_predict: NULL argument");
  return guarded([&] {
    const auto d = static_cast<size_t>(s->model.input_dim());
    for (size_t r = 0; r < rows; ++r) out[r] = s->model.predict(std::span<const double>(x + r * d, d));
  });
}

pb_status pb_shielding_effectiveness(double t2_nm, double rho_ohm_m, double* out) {
  PB_REQUIRE(out, "pb_shielding_effectiveness: out is NULL");
  return guarded([&] { *out = photonbench::shielding_effectiveness(t2_nm, rho_ohm_m); });
}

pb_status pb_band_gap_cutoff_nm(double band_gap_ev, double* out) {
  PB_REQUIRE(out, "pb_band_gap_cutoff_nm: out is NULL");
  return guarded([&] { *out = photonbench::band_gap_cutoff_nm(band_gap_ev); });
}

}  // extern "C"

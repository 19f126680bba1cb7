/* Copyright The photonbench Authors.
 * SPDX-License-Identifier: Apache-2.0 */

/* C interface to the photonbench engine.
 *
 * Every fallible call returns a pb_status. On failure the message is kept in
 * thread-local storage and can be read with pb_last_error() until the next
 * call on the same thread. Objects are opaque handles released with their
 * matching free or destroy function; strings returned through char** out
 * parameters are owned by the caller and released with pb_string_free(). */

#ifndef PHOTONBENCH_PHOTONBENCH_H_
#define PHOTONBENCH_PHOTONBENCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PB_API __declspec(dllexport)
#else
#define PB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pb_status {
  PB_OK = 0,
  PB_ERR_INVALID_ARGUMENT = 1,
  PB_ERR_CONFIG = 2,
  PB_ERR_IO = 3,
  PB_ERR_DIVERGENCE = 4,
  PB_ERR_TIMEOUT = 5,
  PB_ERR_RESOURCE_CAP = 6,
  PB_ERR_NOT_CONVERGED = 7,
  PB_ERR_TRAINING = 8,
  PB_ERR_INTERNAL = 9
} pb_status;

PB_API const char* pb_version(void);
PB_API const char* pb_status_name(pb_status status);
/* Message of the most recent failure on this thread, "" if none. */
PB_API const char* pb_last_error(void);
/* Process exit code for a status: 0 ok, 2 config or argument error,
 * 3 simulation divergence, 4 resource cap, 1 otherwise. */
PB_API int pb_exit_code(pb_status status);
PB_API void pb_string_free(char* s);

/* ---- commands ---------------------------------------------------------- */

typedef struct pb_context pb_context;
/* Receives progress lines; `line` is valid only during the call. */
typedef void (*pb_log_fn)(const char* line, void* user);

PB_API pb_status pb_context_create(pb_context** out);
PB_API void pb_context_destroy(pb_context* ctx);
PB_API pb_status pb_context_set_log(pb_context* ctx, pb_log_fn fn, void* user);

/* Names of the subcommands, one per line. Static storage. */
PB_API const char* pb_command_names(void);

/* Runs a subcommand (fit-material, simulate, sweep, train-surrogate, optimize,
 * report). `config_path` names a TOML file and may be NULL; `overrides_json`
 * is a JSON object merged over it and may be NULL. On success *result_json
 * holds {"command", "summary", "message"}. */
PB_API pb_status pb_command_run(pb_context* ctx, const char* command, const char* config_path,
                                const char* overrides_json, char** result_json);

/* ---- search spaces ----------------------------------------------------- */

/* Number of grid points of a search space given as JSON
 * ({"variant": ..., "params": {...}, "materials": [...], ...}). */
PB_API pb_status pb_search_space_count(const char* space_json, uint64_t* count);

/* ---- materials --------------------------------------------------------- */

typedef struct pb_material pb_material;

/* Loads a fitted material JSON file. */
PB_API pb_status pb_material_load(const char* path, pb_material** out);
PB_API void pb_material_free(pb_material* m);
/* Relative permittivity at a vacuum wavelength, exp(-i w t) convention. */
PB_API pb_status pb_material_permittivity(const pb_material* m, double wavelength_nm, double* re,
                                          double* im);

/* ---- surrogates -------------------------------------------------------- */

typedef struct pb_surrogate pb_surrogate;

PB_API pb_status pb_surrogate_load(const char* path, pb_surrogate** out);
PB_API void pb_surrogate_free(pb_surrogate* s);
PB_API size_t pb_surrogate_input_dim(const pb_surrogate* s);
/* Predicts `rows` points stored row-major in `x` (rows * input_dim values). */
PB_API pb_status pb_surrogate_predict(const pb_surrogate* s, const double* x, size_t rows,
                                      double* out);

/* ---- objectives -------------------------------------------------------- */

/* 20 log10(1 + eta0 t2 / (2 rho)) in dB; t2 in nm, rho in ohm m. */
PB_API pb_status pb_shielding_effectiveness(double t2_nm, double rho_ohm_m, double* out);
/* Wavelength (nm) of the photon energy `band_gap_ev`. */
PB_API pb_status pb_band_gap_cutoff_nm(double band_gap_ev, double* out);

#ifdef __cplusplus
}
#endif

#endif /* PHOTONBENCH_PHOTONBENCH_H_ */

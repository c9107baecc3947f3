/*
 * Copyright 2026 The PSZ Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the PSZ Lab core. Every call returns a psz_status; on
 * failure psz_last_error() holds a message for the calling thread until its
 * next failing call. Handles are opaque and owned by the caller. */

#ifndef PSZ_PSZ_H_
#define PSZ_PSZ_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PSZ_API __declspec(dllexport)
#else
#define PSZ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes for the command-line tool. */
typedef enum psz_status {
  PSZ_OK = 0,
  PSZ_ERR_INTERNAL = 1,
  PSZ_ERR_CONFIG = 2,
  PSZ_ERR_DOMAIN = 3,
  PSZ_ERR_NUMERICAL = 4,
  PSZ_ERR_IO = 5,
  PSZ_ERR_FORMAT = 6
} psz_status;

PSZ_API const char* psz_version(void);
PSZ_API const char* psz_status_name(psz_status status);
PSZ_API const char* psz_last_error(void);

/* Worker cap for parallel stages; 0 defers to PSZ_LAB_THREADS, then to the
 * hardware. */
PSZ_API void psz_set_threads(unsigned threads);

/* Progress lines from long-running commands. Pass NULL to silence. */
typedef void (*psz_log_fn)(const char* line, void* user);
PSZ_API void psz_set_log_callback(psz_log_fn fn, void* user);

/* ---- models ---- */

typedef struct psz_model psz_model;

/* config_json may be NULL for the default configuration. */
PSZ_API psz_status psz_model_create(const char* config_json, uint64_t seed,
                                    psz_model** out);
/* All weights zero. */
PSZ_API psz_status psz_model_create_zeros(const char* config_json,
                                          psz_model** out);
PSZ_API psz_status psz_model_load(const char* path, psz_model** out);
PSZ_API psz_status psz_model_save(const psz_model* model, const char* path);
PSZ_API void psz_model_free(psz_model* model);

PSZ_API psz_status psz_model_info(const psz_model* model, size_t* speakers,
                                  size_t* bins, size_t* parameters);

/* Writes the resolved config as JSON into buf (NUL-terminated) when it
 * fits; *needed receives the required size including the terminator. */
PSZ_API psz_status psz_model_config(const psz_model* model, char* buf,
                                    size_t capacity, size_t* needed);

/* Filters for one pair of zone centres, speaker-major: re[l * bins + n].
 * capacity is the length of each of re and im. */
PSZ_API psz_status psz_model_infer(const psz_model* model, double bz_x,
                                   double bz_y, double dz_x, double dz_y,
                                   double* re, double* im, size_t capacity);

/* ---- acoustic transfer functions ---- */

typedef struct psz_atf psz_atf;

/* Free-field ATFs; config keys: area, resolution, height, speakers, freqs. */
PSZ_API psz_status psz_atf_simulate_anechoic(const char* config_json,
                                             psz_atf** out);
PSZ_API psz_status psz_atf_load(const char* path, psz_atf** out);
PSZ_API psz_status psz_atf_save(const psz_atf* atf, const char* path);
PSZ_API void psz_atf_free(psz_atf* atf);
PSZ_API psz_status psz_atf_info(const psz_atf* atf, size_t* points,
                                size_t* speakers, size_t* bins);

/* Per-bin pressure ("pm") or amplitude ("am") matching for two zones of the
 * given radius. options_json may be NULL. Output layout as in
 * psz_model_infer. */
PSZ_API psz_status psz_design_classic(const psz_atf* atf, const char* method,
                                      double bz_x, double bz_y, double dz_x,
                                      double dz_y, double radius,
                                      const char* options_json, double* re,
                                      double* im, size_t capacity);

/* ---- commands ----
 * Each reads a JSON run config and writes its outputs plus a
 * config.resolved.json snapshot into out_dir. */

PSZ_API psz_status psz_cmd_simulate(const char* config_json,
                                    const char* out_dir);
PSZ_API psz_status psz_cmd_train(const char* config_json, const char* out_dir);
PSZ_API psz_status psz_cmd_eval_map(const char* config_json,
                                    const char* out_dir);
PSZ_API psz_status psz_cmd_compare(const char* config_json,
                                   const char* out_dir);
PSZ_API psz_status psz_cmd_bench(const char* config_json, const char* out_dir);
/* Fails with PSZ_ERR_NUMERICAL when a check exceeds its tolerance. */
PSZ_API psz_status psz_cmd_gradcheck(const char* config_json,
                                     const char* out_dir);

/* ir_csv may be NULL; ir_shift < 0 selects n_fft / 2 + 1. */
PSZ_API psz_status psz_cmd_infer(const char* checkpoint, double bz_x,
                                 double bz_y, double dz_x, double dz_y,
                                 const char* out_path, const char* ir_csv,
                                 long ir_shift);

#ifdef __cplusplus
}
#endif

#endif /* PSZ_PSZ_H_ */

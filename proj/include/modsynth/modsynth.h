// Copyright 2026 The modsynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* C interface to libmodsynth. Every call returns an ms_status; on failure the
 * message is available from ms_last_error() on the same thread. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with ms_string_free(). JSON is used for structured arguments and
 * results. */

#ifndef MODSYNTH_MODSYNTH_H_
#define MODSYNTH_MODSYNTH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MODSYNTH_BUILDING_LIBRARY)
#define MS_API __attribute__((visibility("default")))
#else
#define MS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ms_status {
  MS_OK = 0,
  MS_ERR_FORMAT = 1,
  MS_ERR_LENGTH = 2,
  MS_ERR_DIMENSION = 3,
  MS_ERR_SHAPE = 4,
  MS_ERR_ARGUMENT = 5,
  MS_ERR_CONDITION = 6,
  MS_ERR_DATA = 7,
  MS_ERR_DIVERGENCE = 8,
  MS_ERR_IO = 9,
  MS_ERR_CAPACITY = 10,
  MS_ERR_BIND = 11,
  MS_ERR_DEGENERATE = 12,
  MS_ERR_NOT_FOUND = 13,
  MS_ERR_CONFLICT = 14,
  MS_ERR_INTERNAL = 100
} ms_status;

typedef struct ms_model ms_model;
typedef struct ms_study_server ms_study_server;

MS_API const char* ms_version(void);
MS_API const char* ms_status_name(ms_status status);
/* Message of the last failed call on this thread; "" if none. */
MS_API const char* ms_last_error(void);
MS_API void ms_string_free(char* s);

/* -- dataio ----------------------------------------------------------------- */

/* options_json: {"subjects", "slices", "seed", "size", "misalign",
 * "val_fraction", "test_fraction"}; all optional. Writes slices/ and
 * train.json, val.json, test.json into out_dir. result: entry counts. */
MS_API ms_status ms_phantom_generate(const char* options_json, const char* out_dir,
                                     char** result_json);

/* -- training --------------------------------------------------------------- */

/* config_json: training config (unknown keys rejected, "{}" for defaults).
 * result: {"checkpoint", "loss_log", "epochs": [...]}. */
MS_API ms_status ms_train(const char* config_json, const char* manifest_path,
                          const char* out_dir, char** result_json);
/* Fully resolved config (defaults applied, validated). */
MS_API ms_status ms_resolve_config(const char* config_json, char** resolved_json);

/* -- synthesis -------------------------------------------------------------- */

MS_API ms_status ms_model_load(const char* checkpoint_path, ms_model** out);
MS_API void ms_model_free(ms_model* model);
/* {"modalities", "target", "canonical_size", "epoch"} */
MS_API ms_status ms_model_info(const ms_model* model, char** info_json);

/* Preprocessed n x S x S stack (n = modality count, S = canonical size),
 * condition as a bit string such as "101". Writes S*S floats to out. */
MS_API ms_status ms_model_synthesize(const ms_model* model, const float* stack,
                                     size_t stack_len, const char* condition,
                                     float* out, size_t out_len);

/* inputs_json: {"t1": "a.msl", ...}. Writes the synthetic slice to out_msl
 * and, when real_msl is given, the heat map and raw difference next to it
 * (<out stem>_diff.ppm, <out stem>_diff.msl). result: paths and, with a
 * reference, psnr/mae. */
MS_API ms_status ms_model_synthesize_files(const ms_model* model, const char* inputs_json,
                                           const char* target, const char* out_msl,
                                           const char* real_msl, char** result_json);

/* -- evalmetrics ------------------------------------------------------------ */

/* Per-condition PSNR/MAE over a test manifest. */
MS_API ms_status ms_model_evaluate(const ms_model* model, const char* manifest_path,
                                   const char* target, char** report_json);

MS_API ms_status ms_psnr(const float* a, const float* b, size_t n, double* out);
MS_API ms_status ms_mae(const float* a, const float* b, size_t n, double* out);
/* result: {"statistic", "p_value", "exact", ...} */
MS_API ms_status ms_wilcoxon_signed_rank(const double* x, const double* y, size_t n,
                                         char** result_json);
MS_API ms_status ms_wilcoxon_rank_sum(const double* x, size_t nx, const double* y,
                                      size_t ny, char** result_json);

/* -- studysvc --------------------------------------------------------------- */

/* options_json: {"conditions": ["t1", "t1+flair", ...], "left": "flair",
 * "raters": [...], "per_condition", "real", "seed"}. Writes plan.json,
 * slices/ and images/ into out_dir. result: per-rater trial counts. */
MS_API ms_status ms_study_plan(const ms_model* model, const char* manifest_path,
                               const char* options_json, const char* out_dir,
                               char** result_json);
/* Aggregated summary of study_dir/ratings.jsonl against study_dir/plan.json. */
MS_API ms_status ms_study_report(const char* study_dir, char** summary_json);

/* static_root may be NULL. Ratings are appended to study_dir/ratings.jsonl. */
MS_API ms_status ms_study_server_create(const char* study_dir, const char* admin_token,
                                        const char* static_root, ms_study_server** out);
MS_API void ms_study_server_free(ms_study_server* server);
/* port 0 picks a free port; the bound port is written to bound_port. */
MS_API ms_status ms_study_server_bind(ms_study_server* server, const char* host, int port,
                                      int* bound_port);
/* Blocks until ms_study_server_stop() is called from another thread. */
MS_API ms_status ms_study_server_run(ms_study_server* server);
MS_API ms_status ms_study_server_start(ms_study_server* server);
MS_API ms_status ms_study_server_stop(ms_study_server* server);

#ifdef __cplusplus
}
#endif

#endif /* MODSYNTH_MODSYNTH_H_ */

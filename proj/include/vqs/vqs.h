// Copyright 2026 The VQS Toolkit Authors
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

/* C interface of the VQS toolkit.
 *
 * Every function returns a vqs_status; on failure the thread-local message
 * from vqs_last_error() describes the cause. Objects are opaque handles
 * released with their *_free function. Strings and arrays handed out by the
 * library are released with vqs_string_free / vqs_counts_free. */

#ifndef VQS_VQS_H_
#define VQS_VQS_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VQS_API __declspec(dllexport)
#else
#define VQS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vqs_status {
  VQS_OK = 0,
  VQS_ERR_COUNT_MISMATCH = 1,
  VQS_ERR_DEGENERATE_POLYGON = 2,
  VQS_ERR_DIMENSION_MISMATCH = 3,
  VQS_ERR_NEGATIVE_ENTRY = 4,
  VQS_ERR_INVALID_SIMPLEX = 5,
  VQS_ERR_PARSE = 6,
  VQS_ERR_FLAGGED_RECORD = 7,
  VQS_ERR_SIZES_EXCEED_DATASET = 8,
  VQS_ERR_CORPUS_TOO_SMALL = 9,
  VQS_ERR_BAD_MAGIC = 10,
  VQS_ERR_TRUNCATED_FILE = 11,
  VQS_ERR_DUPLICATE_ID = 12,
  VQS_ERR_SHAPE_MISMATCH = 13,
  VQS_ERR_MISSING_FEATURES = 14,
  VQS_ERR_INCOMPLETE_CANDIDATES = 15,
  VQS_ERR_ID_MISMATCH = 16,
  VQS_ERR_MISSING_PROPOSALS = 17,
  VQS_ERR_MISSING_PREDICTION = 18,
  VQS_ERR_UNSUPPORTED_VERSION = 19,
  VQS_ERR_IO = 20,
  VQS_ERR_INVALID_ARGUMENT = 21,
  VQS_ERR_NOT_FOUND = 22,
  VQS_ERR_INTERNAL = 100
} vqs_status;

VQS_API const char* vqs_version(void);
/* Message of the last failure on the calling thread; "" when none. */
VQS_API const char* vqs_last_error(void);
/* Stable name such as "CountMismatch"; "Ok" for VQS_OK. */
VQS_API const char* vqs_status_name(vqs_status status);
VQS_API void vqs_string_free(char* text);
VQS_API void vqs_counts_free(uint32_t* counts);

/* ---- masks ---- */

typedef struct vqs_mask vqs_mask;

/* bits is row-major height*width bytes (non-zero = set), or NULL for an
 * empty mask. */
VQS_API vqs_status vqs_mask_create(int height, int width, const uint8_t* bits,
                                   vqs_mask** out);
/* Column-major run lengths starting with a run of zeros. */
VQS_API vqs_status vqs_mask_from_rle(int height, int width, const uint32_t* counts,
                                     size_t n_counts, vqs_mask** out);
VQS_API vqs_status vqs_mask_to_rle(const vqs_mask* mask, uint32_t** counts,
                                   size_t* n_counts);
VQS_API vqs_status vqs_mask_shape(const vqs_mask* mask, int* height, int* width);
VQS_API vqs_status vqs_mask_get(const vqs_mask* mask, int row, int col, int* value);
VQS_API vqs_status vqs_mask_area(const vqs_mask* mask, size_t* area);
/* Two empty masks have IOU 1. */
VQS_API vqs_status vqs_mask_iou(const vqs_mask* a, const vqs_mask* b, double* out);
VQS_API void vqs_mask_free(vqs_mask* mask);

/* ---- datasets ---- */

typedef struct vqs_dataset vqs_dataset;

/* Reads images.json, segments.json, questions.json and links.json. */
VQS_API vqs_status vqs_dataset_load(const char* dir, vqs_dataset** out);
VQS_API vqs_status vqs_dataset_counts(const vqs_dataset* dataset, size_t* images,
                                      size_t* segments, size_t* records);
/* JSON array of violations; *n_violations receives its length. */
VQS_API vqs_status vqs_dataset_validate(const vqs_dataset* dataset,
                                        size_t* n_violations, char** json);
/* Statistics of the unflagged records as a JSON object. */
VQS_API vqs_status vqs_dataset_stats(const vqs_dataset* dataset, char** json);
/* Ground-truth mask of one question. */
VQS_API vqs_status vqs_dataset_ground_truth(const vqs_dataset* dataset,
                                            int64_t question_id, vqs_mask** out);
VQS_API void vqs_dataset_free(vqs_dataset* dataset);

/* ---- pipeline stages ---- */

typedef struct vqs_options vqs_options;

VQS_API vqs_status vqs_options_create(vqs_options** out);
/* Replaces every value of key. */
VQS_API vqs_status vqs_options_set(vqs_options* options, const char* key,
                                   const char* value);
/* Adds one more value to a list-valued key. */
VQS_API vqs_status vqs_options_append(vqs_options* options, const char* key,
                                      const char* value);
VQS_API void vqs_options_free(vqs_options* options);

/* Non-zero when name is one of the stages accepted by vqs_stage_run. */
VQS_API int vqs_is_stage(const char* name);
/* Runs a stage. *exit_status is 0 on success and 1 when the input failed
 * validation; *output receives the text to print. */
VQS_API vqs_status vqs_stage_run(const char* stage, const vqs_options* options,
                                 int* exit_status, char** output);

/* ---- annotation service ---- */

typedef struct vqs_server vqs_server;

/* Keys: data-dir (required), log, image-dir, ui-dir, host, port. */
VQS_API vqs_status vqs_server_create(const vqs_options* options, vqs_server** out);
/* Serves on a background thread; *port receives the bound port. */
VQS_API vqs_status vqs_server_start(vqs_server* server, int* port);
VQS_API vqs_status vqs_server_port(const vqs_server* server, int* port);
VQS_API vqs_status vqs_server_stop(vqs_server* server);
VQS_API void vqs_server_free(vqs_server* server);

#ifdef __cplusplus
}
#endif

#endif /* VQS_VQS_H_ */

/* Copyright 2026 The augloop Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libaugloop. Every function returns an augloop_status; on
 * failure the message is available from augloop_last_error() on the same
 * thread. Strings returned through `char**` are owned by the caller and
 * released with augloop_string_free().
 */
#ifndef AUGLOOP_AUGLOOP_H_
#define AUGLOOP_AUGLOOP_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define AUGLOOP_API __attribute__((visibility("default")))
#else
#define AUGLOOP_API
#endif

/* Numeric values are stable; see docs/errors.md. */
typedef enum augloop_status {
  AUGLOOP_OK = 0,
  AUGLOOP_INVALID_ARGUMENT = 1,
  AUGLOOP_IO_ERROR = 2,
  AUGLOOP_IMAGE_UNDECODABLE = 3,
  AUGLOOP_UNKNOWN_OPERATION = 10,
  AUGLOOP_PARAM_INVALID = 11,
  AUGLOOP_SYNTAX_MALFORMED = 12,
  AUGLOOP_OUT_OF_BOUNDS = 20,
  AUGLOOP_DEGENERATE_REGION = 21,
  AUGLOOP_FACTOR_OUT_OF_RANGE = 22,
  AUGLOOP_KERNEL_INVALID = 23,
  AUGLOOP_RESOLUTION_CAP_EXCEEDED = 24,
  AUGLOOP_BACKEND_UNAVAILABLE = 30,
  AUGLOOP_JUDGE_UNAVAILABLE = 40,
  AUGLOOP_CONFIG_INVALID = 41,
  AUGLOOP_TEMPLATE_UNKNOWN = 42,
  AUGLOOP_STRUCTURE_INVALID = 50,
  AUGLOOP_GROUP_TOO_SMALL = 51,
  AUGLOOP_LENGTH_MISMATCH = 52,
  AUGLOOP_BIND_FAILURE = 60,
  AUGLOOP_UNAUTHORIZED = 61,
  AUGLOOP_INTERNAL = 99
} augloop_status;

typedef struct augloop_runtime augloop_runtime;
typedef struct augloop_image augloop_image;
typedef struct augloop_service augloop_service;

AUGLOOP_API const char* augloop_version(void);
/* Stable name such as "OutOfBounds"; "Unknown" for other values. */
AUGLOOP_API const char* augloop_status_name(int status);
/* Message of the last failure on this thread; "" after a success. */
AUGLOOP_API const char* augloop_last_error(void);
AUGLOOP_API void augloop_string_free(char* s);

/* ---- runtime ---------------------------------------------------------- */

/* `config_json` may be NULL or "" for defaults. Unknown keys fail with
 * AUGLOOP_CONFIG_INVALID. */
AUGLOOP_API int augloop_runtime_new(const char* config_json, augloop_runtime** out);
AUGLOOP_API void augloop_runtime_free(augloop_runtime* rt);
/* Effective configuration (token masked). */
AUGLOOP_API int augloop_runtime_config(const augloop_runtime* rt, char** out_json);

/* Runs a JSON operation: augment, rewards, grpo_batch, episode,
 * score_traces, grpo_files, eval, filter, synth, fixture. On success
 * `*out_json` holds the result object. */
AUGLOOP_API int augloop_call(augloop_runtime* rt, const char* op, const char* request_json, char** out_json);

/* ---- service ---------------------------------------------------------- */

/* Serves on the configured host/port until the process ends. */
AUGLOOP_API int augloop_serve(augloop_runtime* rt);
/* Starts the service on a background thread; `*port` receives the bound
 * port (useful with port 0). */
AUGLOOP_API int augloop_service_start(augloop_runtime* rt, augloop_service** out, int* port);
AUGLOOP_API void augloop_service_stop(augloop_service* svc);

/* ---- images ----------------------------------------------------------- */

AUGLOOP_API int augloop_image_load(const char* path, augloop_image** out);
/* Copies `width*height*channels` interleaved bytes; channels is 1, 3 or 4. */
AUGLOOP_API int augloop_image_from_pixels(int width, int height, int channels, const uint8_t* pixels,
                                          augloop_image** out);
AUGLOOP_API void augloop_image_free(augloop_image* img);
AUGLOOP_API int augloop_image_info(const augloop_image* img, int* width, int* height, int* channels);
/* Borrowed pointer valid until the image is freed. */
AUGLOOP_API const uint8_t* augloop_image_pixels(const augloop_image* img);
AUGLOOP_API int augloop_image_save_png(const augloop_image* img, const char* path);
/* 64 hex characters plus NUL. */
AUGLOOP_API int augloop_image_sha256(const augloop_image* img, char out[65]);

/* Parses `call_text` (a call such as "flip(img, axis=\"horizontal\")")
 * against the runtime's vocabulary and executes it. `original` may be NULL
 * (defaults to `img`). Parse and execution failures return their status
 * with the model-visible error text in augloop_last_error(). */
AUGLOOP_API int augloop_image_apply(const augloop_runtime* rt, const augloop_image* img, const char* call_text,
                                    const augloop_image* original, augloop_image** out);

/* ---- rewards ---------------------------------------------------------- */

AUGLOOP_API int augloop_reward_suc(double r_vqa, int k, int max_calls, int grace_calls, double* out);

#ifdef __cplusplus
}
#endif

#endif /* AUGLOOP_AUGLOOP_H_ */

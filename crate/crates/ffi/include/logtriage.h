/* C interface to the logtriage log-anomaly analysis pipeline.
* Generated by cbindgen; do not edit by hand. */

#ifndef LOGTRIAGE_H
#define LOGTRIAGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum LtStatus {
  /**
   * The call succeeded.
   */
  LT_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  LT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  LT_STATUS_INVALID_UTF8 = 2,
  /**
   * The configuration did not parse or validate.
   */
  LT_STATUS_BAD_CONFIG = 3,
  /**
   * The vector store could not be loaded or queried.
   */
  LT_STATUS_STORE_FAILURE = 4,
  /**
   * An argument named an unknown strategy, or was otherwise unusable.
   */
  LT_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The analysis chain failed (backend error, missing context, …).
   */
  LT_STATUS_ANALYSIS_FAILURE = 6,
  /**
   * An internal invariant broke; this is a bug in the library.
   */
  LT_STATUS_INTERNAL = 7,
} LtStatus;

/**
 * Verdict codes written to `lt_analyze`'s out-parameter.
 */
typedef enum LtVerdict {
  LT_VERDICT_NORMAL = 0,
  LT_VERDICT_ANOMALY = 1,
  LT_VERDICT_UNPARSEABLE = 2,
} LtVerdict;

/**
 * Opaque analyzer: configuration, sealed vector store, embedder, and
 * prompt templates, ready to classify entries.
 */
typedef struct lt_analyzer lt_analyzer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message for the most recent failure on this thread, or NULL if the
 * last call succeeded. The caller owns the returned string; release it
 * with `lt_string_free`.
 */
char *lt_last_error_message(void);

/**
 * The library version as a static NUL-terminated string. Do not free.
 */
const char *lt_version(void);

/**
 * Release a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be a pointer previously returned by this library and not yet
 * freed.
 */
void lt_string_free(char *s);

/**
 * Build an analyzer from a JSON configuration document (the same schema
 * the `logtriage` CLI reads). The store referenced by `store_path` must
 * already exist — build it with `logtriage build-index`.
 *
 * Returns NULL on failure; see `lt_last_error_message`.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string or NULL.
 */
struct lt_analyzer *lt_analyzer_new(const char *config_json);

/**
 * Destroy an analyzer. NULL is a no-op.
 *
 * # Safety
 * `analyzer` must be a pointer from `lt_analyzer_new`, not yet freed.
 */
void lt_analyzer_free(struct lt_analyzer *analyzer);

/**
 * Classify one log entry (message text only, no label token).
 *
 * `strategy` and `model` may be NULL to use the first configured values.
 * On success writes the verdict code (`LtVerdict`) to `verdict_out`, and,
 * when `result_json_out` is non-NULL, a JSON document describing the
 * analysis (free it with `lt_string_free`).
 *
 * # Safety
 * All pointer arguments must be valid; string arguments must be
 * NUL-terminated.
 */
enum LtStatus lt_analyze(const struct lt_analyzer *analyzer,
                         const char *entry,
                         const char *strategy,
                         const char *model,
                         int *verdict_out,
                         char **result_json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOGTRIAGE_H */

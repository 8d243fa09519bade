#ifndef VECREFINE_H
#define VECREFINE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Failure category of a loop the vectorizer rejected.
 */
typedef enum VrCategory {
  /**
   * The loop was vectorized.
   */
  VR_CATEGORY_NONE = 0,
  VR_CATEGORY_UNSAFE_DEPENDENT_MEM_OPS = 1,
  VR_CATEGORY_UNIDENTIFIED_REDUCTION = 2,
  VR_CATEGORY_UNKNOWN_ARRAY_BOUNDS = 3,
  VR_CATEGORY_UNKNOWN_TRIP_COUNT = 4,
  VR_CATEGORY_UNVECTORIZABLE_INSTR = 5,
  VR_CATEGORY_SWITCH_IN_LOOP = 6,
  VR_CATEGORY_OTHER = 7,
} VrCategory;

typedef enum VrStatus {
  VR_STATUS_OK = 0,
  VR_STATUS_NULL_ARGUMENT = 1,
  VR_STATUS_INVALID_UTF8 = 2,
  VR_STATUS_INVALID_ARGUMENT = 3,
  VR_STATUS_NOT_FOUND = 4,
  VR_STATUS_OUT_OF_RANGE = 5,
  VR_STATUS_CONFIG = 6,
  VR_STATUS_TOOL_MISSING = 7,
  VR_STATUS_FAILED = 8,
  VR_STATUS_PANIC = 9,
} VrStatus;

/**
 * Parsed vectorization remarks.
 */
typedef struct VrReport VrReport;

/**
 * A loaded run manifest.
 */
typedef struct VrSession VrSession;

/**
 * One loop of a parsed report. Width and interleave are 0 when absent.
 */
typedef struct VrLoop {
  uint32_t line;
  uint32_t column;
  bool vectorized;
  uint32_t width;
  uint32_t interleave;
  enum VrCategory category;
} VrLoop;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The caller owns
 * the returned string and releases it with `vr_string_free`.
 */
char *vr_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library that was not freed yet.
 */
void vr_string_free(char *s);

/**
 * Parses clang `-Rpass=loop-vectorize` / `-Rpass-analysis=loop-vectorize`
 * output into a report handle.
 *
 * # Safety
 * `remarks` must be a NUL-terminated string; `out` must be writable.
 */
enum VrStatus vr_parse_remarks(const char *remarks, struct VrReport **out);

/**
 * Number of loop records in `report`; 0 for NULL.
 *
 * # Safety
 * `report` must be NULL or a live handle from `vr_parse_remarks`.
 */
size_t vr_report_loop_count(const struct VrReport *report);

/**
 * Number of remark lines that could not be attributed to a record.
 *
 * # Safety
 * `report` must be NULL or a live handle from `vr_parse_remarks`.
 */
size_t vr_report_leftover_count(const struct VrReport *report);

/**
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum VrStatus vr_report_get_loop(const struct VrReport *report, size_t index, struct VrLoop *out);

/**
 * The verbatim failure reason of loop `index`, or NULL when the loop was
 * vectorized or the index is out of range. Free with `vr_string_free`.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
char *vr_report_loop_reason(const struct VrReport *report, size_t index);

/**
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void vr_report_free(struct VrReport *report);

/**
 * Maps a vectorizer failure reason to its category; NULL or non-UTF-8 input
 * yields `Other`.
 *
 * # Safety
 * `reason` must be NULL or NUL-terminated.
 */
enum VrCategory vr_classify_reason(const char *reason);

/**
 * Extracts the code between the begin/end markers of a model response.
 * `VR_STATUS_NOT_FOUND` when the markers are missing.
 *
 * # Safety
 * `text` must be NUL-terminated; `out` must be writable. The string written
 * to `out` is freed with `vr_string_free`.
 */
enum VrStatus vr_extract_candidate(const char *text, char **out);

/**
 * Geometric mean of `len` positive values.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `out` must be writable.
 */
enum VrStatus vr_geomean(const double *values, size_t len, double *out);

/**
 * Dollar cost of a token count at per-million prices.
 */
double vr_cost(uint64_t input_tokens,
               uint64_t output_tokens,
               double price_in_per_million,
               double price_out_per_million);

/**
 * Loads a run manifest. Relative paths inside it resolve against its directory.
 *
 * # Safety
 * `manifest_path` must be NUL-terminated; `out` must be writable.
 */
enum VrStatus vr_session_open(const char *manifest_path, struct VrSession **out);

/**
 * Overrides the archive directory of an open session.
 *
 * # Safety
 * `session` must be a live handle; `dir` must be NUL-terminated.
 */
enum VrStatus vr_session_set_output_dir(struct VrSession *session, const char *dir);

/**
 * Runs every case of the session and writes the coverage report JSON to
 * `report_json` (free with `vr_string_free`). Benchmarks run when
 * `with_bench` is true and the manifest enables them.
 *
 * # Safety
 * `session` must be a live handle; `report_json` must be writable.
 */
enum VrStatus vr_session_run(struct VrSession *session, bool with_bench, char **report_json);

/**
 * # Safety
 * `session` must be NULL or a handle not yet freed.
 */
void vr_session_free(struct VrSession *session);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VECREFINE_H */

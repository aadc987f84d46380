#ifndef GAZEBENCH_H
#define GAZEBENCH_H

/* Generated by cbindgen from gazebench-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Head controllers addressable over the ABI.
typedef enum GbController {
  GbFixed = 0,
  GbPanning = 1,
  GbLookAhead = 2,
  GbOptimised = 3,
} GbController;

// Status codes returned by every FFI entry point.
typedef enum GbStatus {
  GbOk = 0,
  GbNullPointer = 1,
  GbInvalidUtf8 = 2,
  GbInvalidArgument = 3,
  GbNoPath = 4,
  GbNoFeasibleTask = 5,
  GbIoError = 6,
  GbJsonError = 7,
  GbSimulationError = 8,
} GbStatus;

// Opaque handle to a benchmark result set.
typedef struct GbResults GbResults;

// Opaque handle to a loaded benchmark suite.
typedef struct GbSuite GbSuite;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; never freed by the caller.
const char *gb_version(void);

// Message for the most recent error on this thread, or NULL when none.
// The pointer stays valid until the next failing call on the thread.
const char *gb_last_error_message(void);

// Release a string returned through a `char **` out parameter.
//
// # Safety
// `s` must be a pointer previously returned by this library and not yet
// freed; NULL is ignored.
void gb_string_free(char *s);

// Generate a canonical suite (`"2d-small"` or `"3d-lite-dynamic"`) into
// a directory.
//
// # Safety
// `name` and `dir` must be valid NUL-terminated UTF-8 strings.
enum GbStatus gb_suite_generate(const char *name, uint64_t seed, const char *dir);

// Load a suite directory into an opaque handle.
//
// # Safety
// `dir` must be a valid NUL-terminated UTF-8 string and `out` a valid
// pointer; on success the caller owns the handle and must release it
// with [`gb_suite_free`].
enum GbStatus gb_suite_load(const char *dir, struct GbSuite **out);

// Release a suite handle. NULL is ignored.
//
// # Safety
// `suite` must come from [`gb_suite_load`] and not be freed twice.
void gb_suite_free(struct GbSuite *suite);

// Number of tasks in a loaded suite.
//
// # Safety
// `suite` must be a live handle and `out` a valid pointer.
enum GbStatus gb_suite_task_count(const struct GbSuite *suite, size_t *out);

// Run a single episode and return its record as a JSON string.
//
// # Safety
// `suite` must be a live handle and `json_out` a valid pointer; the
// returned string must be freed with [`gb_string_free`].
enum GbStatus gb_run_episode(const struct GbSuite *suite,
                             size_t task_index,
                             enum GbController controller,
                             char **json_out);

// Run a set of controllers over every task, returning the results JSON.
// `controllers_csv` is a comma-separated list such as
// `"optimised,fixed,panning,lookahead"`.
//
// # Safety
// `suite` must be a live handle; `controllers_csv` a valid NUL-terminated
// UTF-8 string; `json_out` a valid pointer. The returned string must be
// freed with [`gb_string_free`].
enum GbStatus gb_run_suite(const struct GbSuite *suite,
                           const char *controllers_csv,
                           char **json_out);

// Parse a results JSON string into an opaque handle.
//
// # Safety
// `json` must be a valid NUL-terminated UTF-8 string and `out` a valid
// pointer; the handle must be released with [`gb_results_free`].
enum GbStatus gb_results_parse(const char *json, struct GbResults **out);

// Release a results handle. NULL is ignored.
//
// # Safety
// `results` must come from [`gb_results_parse`] and not be freed twice.
void gb_results_free(struct GbResults *results);

// Write results to a results JSON file and its rank table to a CSV file.
// Either path may be NULL to skip that output.
//
// # Safety
// `results` must be a live handle; non-NULL paths must be valid
// NUL-terminated UTF-8 strings.
enum GbStatus gb_results_write(const struct GbResults *results,
                               const char *results_json_path,
                               const char *rank_csv_path);

// Results JSON with wall-clock latency fields masked, for determinism
// comparisons across runs.
//
// # Safety
// `results` must be a live handle and `json_out` a valid pointer; the
// returned string must be freed with [`gb_string_free`].
enum GbStatus gb_results_masked_json(const struct GbResults *results, char **json_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZEBENCH_H */

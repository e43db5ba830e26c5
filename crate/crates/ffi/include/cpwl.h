#ifndef CPWL_H
#define CPWL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum CpwlStatus {
  CPWL_STATUS_OK = 0,
  CPWL_STATUS_INVALID_INPUT = 1,
  CPWL_STATUS_PRECONDITION = 2,
  CPWL_STATUS_INTERNAL = 3,
  CPWL_STATUS_NULL_POINTER = 4,
  CPWL_STATUS_PANIC = 5,
} CpwlStatus;

/**
 * Opaque handle to a parsed CPWL function.
 */
typedef struct CpwlFunctionHandle CpwlFunctionHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a function document (a bare `{"pieces": ...}` object or a
 * `cpwl-query` document) into a new handle stored in `*out`.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` is writable.
 */
enum CpwlStatus cpwl_function_from_json(const char *json, struct CpwlFunctionHandle **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` is null or came from [`cpwl_function_from_json`] and was not freed.
 */
void cpwl_function_free(struct CpwlFunctionHandle *handle);

/**
 * Ambient dimension `m` of the function.
 *
 * # Safety
 * `handle` is a live handle; `out` is writable.
 */
enum CpwlStatus cpwl_function_dim(const struct CpwlFunctionHandle *handle, size_t *out);

/**
 * Evaluates at `point` (comma-separated rationals such as `"1/2,-1"`).
 * The value is written to `*out` as `"p/q"`, or `"+inf"` off the domain.
 *
 * # Safety
 * `handle` is a live handle; `point` is NUL-terminated; `out` is writable.
 */
enum CpwlStatus cpwl_function_evaluate(const struct CpwlFunctionHandle *handle,
                                       const char *point,
                                       char **out);

/**
 * Runs a command-line subcommand (`"eval"`, `"d2"`, `"stability"`, ...)
 * on a problem document and writes the JSON report to `*out`. Query data
 * comes from the document.
 *
 * # Safety
 * `command` and `document` are NUL-terminated; `out` is writable.
 */
enum CpwlStatus cpwl_run(const char *command, const char *document, uint64_t seed, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or came from this library and was not freed.
 */
void cpwl_string_free(char *s);

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *cpwl_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPWL_H */

#ifndef MCFILL_H
#define MCFILL_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum McfStatus {
  MCF_STATUS_OK = 0,
  MCF_STATUS_NULL_POINTER = 1,
  MCF_STATUS_INVALID_UTF8 = 2,
  MCF_STATUS_PARSE = 3,
  MCF_STATUS_INVALID_INPUT = 4,
  MCF_STATUS_PRECONDITION = 5,
  MCF_STATUS_RESOURCE_LIMIT = 6,
  MCF_STATUS_INVARIANT = 7,
  MCF_STATUS_BUFFER_TOO_SMALL = 8,
  MCF_STATUS_PANIC = 9,
} McfStatus;

/**
 * A hereditary family, either on its own ground set or on a model's points.
 */
typedef struct McfFamily McfFamily;

/**
 * A block model.
 */
typedef struct McfModel McfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on the same thread.
 */
const char *mcf_last_error(void);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void mcf_string_free(char *s);

/**
 * Parses a model file such as `{"blocks":[{"measure":"1/2","points":["a"]}]}`.
 *
 * # Safety
 * `json` must be a nul-terminated string and `model` writable.
 */
enum McfStatus mcf_model_from_json(const char *json, struct McfModel **model);

/**
 * # Safety
 * `model` must come from `mcf_model_from_json`, or be null.
 */
void mcf_model_free(struct McfModel *model);

/**
 * # Safety
 * `model` must be a live handle and `count` writable.
 */
enum McfStatus mcf_model_point_count(const struct McfModel *model, size_t *count);

/**
 * Parses a family file. With a model the elements are its point names and
 * membership is asked in point ids; with a null model the family lives on
 * naturals or leaves.
 *
 * # Safety
 * `json` must be a nul-terminated string, `model` a live handle or null,
 * and `family` writable.
 */
enum McfStatus mcf_family_from_json(const char *json,
                                    const struct McfModel *model,
                                    struct McfFamily **family);

/**
 * # Safety
 * `family` must come from `mcf_family_from_json`, or be null.
 */
void mcf_family_free(struct McfFamily *family);

/**
 * # Safety
 * `family` must be a live handle, `elements` must point to `len` values
 * (or be null when `len` is 0) and `member` must be writable.
 */
enum McfStatus mcf_family_contains(const struct McfFamily *family,
                                   const uint64_t *elements,
                                   size_t len,
                                   bool *member);

/**
 * Writes the upper half of the `len` naturals at `set` to `result` (room
 * for `capacity` values) and its size to `result_len`.
 *
 * # Safety
 * `set` must point to `len` values, `result` to `capacity` writable values,
 * and `result_len` must be writable.
 */
enum McfStatus mcf_schreier_extract(const uint64_t *set,
                                    size_t len,
                                    uint64_t *result,
                                    size_t capacity,
                                    size_t *result_len);

/**
 * Decides MC-filling of `family` (built on `model`) at `epsilon` ("p/q").
 * `holds` receives the decision and `verdict_json` a verdict with its
 * certificate, to be released with `mcf_string_free`. `covers` non-zero
 * lets the adversary choose covers too.
 *
 * # Safety
 * Handles must be live, `epsilon` nul-terminated, outputs writable.
 */
enum McfStatus mcf_check_mcfilling(const struct McfModel *model,
                                   const struct McfFamily *family,
                                   const char *epsilon,
                                   int covers,
                                   size_t max_points,
                                   bool *holds,
                                   char **verdict_json);

/**
 * Runs the command line with `argc` arguments (the first is the program
 * name). The report or error object is returned in `report_json`; the
 * function returns the command's exit status (0, 1 or 2), or -1 when the
 * arguments cannot be read.
 *
 * # Safety
 * `argv` must hold `argc` nul-terminated strings; `report_json` writable.
 */
int mcf_run_cli(int argc, const char *const *argv, char **report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCFILL_H */

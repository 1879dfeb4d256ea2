#ifndef BERNPOP_H
#define BERNPOP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BpLevel {
  BP_LEVEL_ZERO = 0,
  BP_LEVEL_FIRST_LP = 1,
  BP_LEVEL_ONE = 2,
  BP_LEVEL_TWO = 3,
} BpLevel;

typedef enum BpSplit {
  BP_SPLIT_LONGEST_EDGE = 0,
  BP_SPLIT_ZERO_CENTERED = 1,
} BpSplit;

/**
 * Result codes. Zero is success.
 */
typedef enum BpStatus {
  BP_STATUS_OK = 0,
  BP_STATUS_NULL_POINTER = 1,
  BP_STATUS_INVALID_UTF8 = 2,
  BP_STATUS_PARSE_ERROR = 3,
  BP_STATUS_DIMENSION_MISMATCH = 4,
  BP_STATUS_DEGREE_ERROR = 5,
  BP_STATUS_INVALID_ARGUMENT = 6,
  BP_STATUS_INFEASIBLE = 7,
  BP_STATUS_SOLVER_ERROR = 8,
  /**
   * Output is filled in, but the run stopped on its box budget.
   */
  BP_STATUS_NOT_CONVERGED = 9,
  BP_STATUS_PANIC = 10,
} BpStatus;

/**
 * Opaque problem handle.
 */
typedef struct BpProblem BpProblem;

typedef struct BpBnbOptions {
  enum BpLevel level;
  double epsilon;
  size_t max_boxes;
  double min_box_width;
  enum BpSplit split;
} BpBnbOptions;

typedef struct BpBnbResult {
  double lower;
  double upper;
  bool converged;
  size_t subdivisions;
  size_t cutoffs;
  size_t mono;
  size_t edge_subdivisions;
  size_t edge_cutoffs;
  double elapsed;
} BpBnbResult;

typedef struct BpVerdict {
  double v_bound;
  double vdot_bound;
  bool stable;
  bool converged;
} BpVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bp_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *bp_last_error_message(void);

/**
 * Defaults: level 0, epsilon 1e-9, one million boxes, longest-edge split.
 */
struct BpBnbOptions bp_bnb_options_default(void);

/**
 * Parses a problem file's contents. On success `*out` owns a handle that
 * must be released with [`bp_problem_free`].
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BpStatus bp_problem_from_json(const char *json, struct BpProblem **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `problem` must come from [`bp_problem_from_json`] and not be used again.
 */
void bp_problem_free(struct BpProblem *problem);

/**
 * Number of variables.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum BpStatus bp_problem_dimension(const struct BpProblem *problem, size_t *out);

/**
 * Lower bound of the objective over the whole box at one relaxation level,
 * in binary64 arithmetic.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum BpStatus bp_relax(const struct BpProblem *problem, enum BpLevel level, double *out);

/**
 * As [`bp_relax`] but in exact rational arithmetic. `*out` receives a
 * fraction string such as `"-1170"` or `"-1/2"`, to be released with
 * [`bp_string_free`].
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum BpStatus bp_relax_exact(const struct BpProblem *problem, enum BpLevel level, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void bp_string_free(char *s);

/**
 * Branch-and-bound over the problem's box and constraints. When `witness`
 * is non-null it receives the best point found; `witness_len` must then be
 * at least the dimension. Returns `NotConverged` with `out` filled in when
 * the box budget ran out.
 *
 * # Safety
 * `problem` must be a live handle, `options` and `out` valid pointers, and
 * `witness` null or valid for `witness_len` writes.
 */
enum BpStatus bp_bnb(const struct BpProblem *problem,
                     const struct BpBnbOptions *options,
                     struct BpBnbResult *out,
                     double *witness,
                     size_t witness_len);

/**
 * Lyapunov check for a problem file with a `lyapunov` section. The split
 * option is ignored; boxes are always split through the origin.
 *
 * # Safety
 * `problem` must be a live handle, `options` and `out` valid pointers.
 */
enum BpStatus bp_lyapunov(const struct BpProblem *problem,
                          const struct BpBnbOptions *options,
                          struct BpVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERNPOP_H */

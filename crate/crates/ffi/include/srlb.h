#ifndef SRLB_H
#define SRLB_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SrlbStatus {
  SRLB_STATUS_OK = 0,
  SRLB_STATUS_RANGE_TOO_TIGHT = 1,
  SRLB_STATUS_ARITHMETIC_OVERFLOW = 2,
  SRLB_STATUS_DIMENSION_MISMATCH = 3,
  SRLB_STATUS_POINT_ESCAPES_GRID = 4,
  SRLB_STATUS_INSTANCE_TOO_LARGE = 5,
  SRLB_STATUS_BUDGET_EXCEEDED = 6,
  SRLB_STATUS_EMPTY_INPUT = 7,
  SRLB_STATUS_INSUFFICIENT_DATA = 8,
  SRLB_STATUS_INVALID_ARGUMENT = 9,
  SRLB_STATUS_NULL_POINTER = 10,
  /**
   * The caller's buffer is too small; the required length was written.
   */
  SRLB_STATUS_BUFFER_TOO_SMALL = 11,
  SRLB_STATUS_IO = 12,
  SRLB_STATUS_PARSE = 13,
  SRLB_STATUS_PANIC = 14,
} SrlbStatus;

/**
 * Opaque instance handle.
 */
typedef struct SrlbInstance SrlbInstance;

/**
 * Opaque kd-tree handle.
 */
typedef struct SrlbKdTree SrlbKdTree;

/**
 * Construction parameters.
 */
typedef struct SrlbParams {
  uint32_t d;
  uint64_t s;
  uint64_t t;
  uint64_t n;
  uint64_t a;
  uint64_t b;
  uint64_t m;
} SrlbParams;

typedef struct SrlbVerifyReport {
  bool richness_exact;
  uint64_t max_pair_coverage;
  uint64_t beta_bound;
  bool k2beta_free;
  bool containment;
  bool family_exact;
  bool grid_exact;
  bool passed;
} SrlbVerifyReport;

/**
 * Lower-bound figures; `figure_of_merit_num / figure_of_merit_den = m·t/β`.
 */
typedef struct SrlbBoundReport {
  uint64_t m;
  uint64_t t;
  uint64_t alpha;
  uint64_t beta;
  uint64_t figure_of_merit_num;
  uint64_t figure_of_merit_den;
  uint64_t exponent_num;
  uint64_t exponent_den;
} SrlbBoundReport;

typedef struct SrlbQueryStats {
  uint64_t nodes_visited;
  uint64_t leaves_scanned;
  uint64_t points_reported;
  uint64_t points_tested;
} SrlbQueryStats;

typedef struct SrlbFitResult {
  double slope;
  double intercept;
  double r_squared;
  size_t points_used;
} SrlbFitResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or NULL. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *srlb_last_error_message(void);

/**
 * Normalizes `(d, n, t)` onto the construction's lattice.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SrlbStatus srlb_normalize_params(uint32_t d, uint64_t n, uint64_t t, struct SrlbParams *out);

/**
 * Generates the instance for `(d, n, t)`.
 *
 * # Safety
 * `out` must be valid for writes. The handle written there must be freed
 * with [`srlb_instance_free`].
 */
enum SrlbStatus srlb_instance_new(uint32_t d, uint64_t n, uint64_t t, struct SrlbInstance **out);

/**
 * Parses an instance document (`{params, points?, hyperplanes?, adjacency?}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum SrlbStatus srlb_instance_from_json(const char *json, struct SrlbInstance **out);

/**
 * Serializes an instance. The string must be released with
 * [`srlb_string_free`].
 *
 * # Safety
 * `instance` must be a live handle; `out` must be valid for writes.
 */
enum SrlbStatus srlb_instance_to_json(const struct SrlbInstance *instance, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void srlb_string_free(char *s);

/**
 * # Safety
 * `instance` must be NULL or a live handle; it is invalid afterwards.
 */
void srlb_instance_free(struct SrlbInstance *instance);

/**
 * # Safety
 * `instance` must be a live handle; `out` must be valid for writes.
 */
enum SrlbStatus srlb_instance_params(const struct SrlbInstance *instance, struct SrlbParams *out);

/**
 * Number of points; 0 for a NULL handle.
 *
 * # Safety
 * `instance` must be NULL or a live handle.
 */
size_t srlb_instance_point_count(const struct SrlbInstance *instance);

/**
 * Number of hyperplanes; 0 for a NULL handle.
 *
 * # Safety
 * `instance` must be NULL or a live handle.
 */
size_t srlb_instance_hyperplane_count(const struct SrlbInstance *instance);

/**
 * Writes all point coordinates, row by row (`point_count · d` values).
 * On `BufferTooSmall`, `*written` holds the required length.
 *
 * # Safety
 * `instance` must be a live handle, `buf` valid for `cap` writes, `written`
 * valid for writes.
 */
enum SrlbStatus srlb_instance_points(const struct SrlbInstance *instance,
                                     int64_t *buf,
                                     size_t cap,
                                     size_t *written);

/**
 * Writes hyperplane `index` as `d` values: `a_1, …, a_{d-1}, b`.
 *
 * # Safety
 * `instance` must be a live handle, `buf` valid for `cap` writes, `written`
 * valid for writes.
 */
enum SrlbStatus srlb_instance_hyperplane(const struct SrlbInstance *instance,
                                         size_t index,
                                         int64_t *buf,
                                         size_t cap,
                                         size_t *written);

/**
 * Runs the full verification (exact richness, pair coverage, containment,
 * family and grid checks) with the given pair-coverage budget.
 *
 * # Safety
 * `instance` must be a live handle; `out` must be valid for writes.
 */
enum SrlbStatus srlb_instance_verify(const struct SrlbInstance *instance,
                                     uint64_t budget,
                                     struct SrlbVerifyReport *out);

/**
 * Bound figures for an instance. Fails with `ArithmeticOverflow` when the
 * reduced figure of merit does not fit in 64 bits.
 *
 * # Safety
 * `instance` must be a live handle; `out` must be valid for writes.
 */
enum SrlbStatus srlb_instance_bound_report(const struct SrlbInstance *instance,
                                           struct SrlbBoundReport *out);

/**
 * Builds a kd-tree over the instance's points.
 *
 * # Safety
 * `instance` must be a live handle; `out` must be valid for writes. The
 * tree must be freed with [`srlb_kdtree_free`]; it does not borrow the
 * instance.
 */
enum SrlbStatus srlb_kdtree_build(const struct SrlbInstance *instance,
                                  size_t leaf_capacity,
                                  struct SrlbKdTree **out);

/**
 * # Safety
 * `tree` must be NULL or a live handle; it is invalid afterwards.
 */
void srlb_kdtree_free(struct SrlbKdTree *tree);

/**
 * Reports the points inside the intersection of `count` closed halfspaces.
 *
 * `normals` holds `count · d` coefficients, `offsets` and `senses` one
 * entry per halfspace (`sense` 0 for `≤`, 1 for `≥`). Indices refer to the
 * instance's point order. `stats` may be NULL; it is filled even when the
 * index buffer is too small.
 *
 * # Safety
 * `tree` must be a live handle; the input arrays must hold the stated
 * number of elements; `indices` must be valid for `cap` writes and
 * `written` for one.
 */
enum SrlbStatus srlb_kdtree_query(const struct SrlbKdTree *tree,
                                  const int64_t *normals,
                                  const int64_t *offsets,
                                  const int32_t *senses,
                                  size_t count,
                                  size_t *indices,
                                  size_t cap,
                                  size_t *written,
                                  struct SrlbQueryStats *stats);

/**
 * Reports the points on hyperplane `index` of `instance` through its slab
 * query.
 *
 * # Safety
 * Same as [`srlb_kdtree_query`]; `instance` must be a live handle.
 */
enum SrlbStatus srlb_kdtree_slab_query(const struct SrlbKdTree *tree,
                                       const struct SrlbInstance *instance,
                                       size_t index,
                                       size_t *indices,
                                       size_t cap,
                                       size_t *written,
                                       struct SrlbQueryStats *stats);

/**
 * Least-squares slope of `log2 ys` against `log2 xs`.
 *
 * # Safety
 * `xs` and `ys` must hold `len` values; `out` must be valid for writes.
 */
enum SrlbStatus srlb_fit_power_law(const double *xs,
                                   const double *ys,
                                   size_t len,
                                   struct SrlbFitResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRLB_H */

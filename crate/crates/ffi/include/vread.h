#ifndef VREAD_H
#define VREAD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum VrStatus {
  VR_STATUS_OK = 0,
  VR_STATUS_NULL_POINTER = 1,
  VR_STATUS_INVALID_ARGUMENT = 2,
  VR_STATUS_INSUFFICIENT_DATA = 3,
  VR_STATUS_PARSE = 4,
  VR_STATUS_FORMAT = 5,
  VR_STATUS_IO = 6,
  VR_STATUS_INDEX_OUT_OF_RANGE = 7,
  VR_STATUS_INTERNAL = 8,
} VrStatus;

/**
 * A trained two-tower model loaded from a checkpoint.
 */
typedef struct VrModel VrModel;

/**
 * Mergeable accumulator of clicked dwell times.
 */
typedef struct VrStatsAccumulator VrStatsAccumulator;

/**
 * Normalized dwell-time curve parameters.
 */
typedef struct VrNdtParams {
  double offset;
  double tau;
  double a;
  double b;
  double t_max;
  double precision;
} VrNdtParams;

/**
 * Fitted ln(dwell time) moments and thresholds.
 */
typedef struct VrDwellStats {
  double mu;
  double sigma;
  uint64_t n;
  double x_l;
  double x_h;
} VrDwellStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vr_version(void);

/**
 * Default curve: offset 15 s, tau 20 s, t_max 1.575, precision 1e-5.
 *
 * # Safety
 * `out` must be a valid pointer to writable memory.
 */
enum VrStatus vr_ndt_default(struct VrNdtParams *out);

/**
 * Scale constants `a`, `b` so the curve starts at 0 and saturates at `t_max`.
 *
 * # Safety
 * `a` and `b` must be valid pointers.
 */
enum VrStatus vr_derive_scale(double offset, double tau, double t_max, double *a, double *b);

/**
 * Largest tau whose curve is within `precision` of `t_max` at `x_h`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum VrStatus vr_solve_tau(double offset, double x_h, double precision, double t_max, double *out);

/**
 * Normalized dwell time of `t` seconds.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum VrStatus vr_ndt(const struct VrNdtParams *params, double t, double *out);

/**
 * `(auc - 0.5) / (base_auc - 0.5) - 1`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum VrStatus vr_relaimpr(double auc, double base_auc, double *out);

/**
 * AUC of `n` scores against 0/1 labels, ties counted as half.
 *
 * # Safety
 * `scores` and `labels` must point to `n` readable elements; `out` must be valid.
 */
enum VrStatus vr_auc(const double *scores, const uint8_t *labels, uintptr_t n, double *out);

/**
 * New empty accumulator; free with [`vr_stats_free`].
 */
struct VrStatsAccumulator *vr_stats_new(void);

/**
 * Adds one clicked dwell time. Non-positive values are ignored and
 * reported through `used` (0 or 1; may be NULL).
 *
 * # Safety
 * `acc` must come from [`vr_stats_new`]; `used` may be NULL.
 */
enum VrStatus vr_stats_push(struct VrStatsAccumulator *acc, double dwell_time_s, uint8_t *used);

/**
 * Folds `src` into `dst`; `src` is unchanged.
 *
 * # Safety
 * Both handles must come from [`vr_stats_new`].
 */
enum VrStatus vr_stats_merge(struct VrStatsAccumulator *dst, const struct VrStatsAccumulator *src);

/**
 * Fits mu, sigma and the thresholds; needs at least two samples.
 *
 * # Safety
 * `acc` must come from [`vr_stats_new`]; `out` must be valid.
 */
enum VrStatus vr_stats_finalize(const struct VrStatsAccumulator *acc, struct VrDwellStats *out);

/**
 * # Safety
 * `acc` must come from [`vr_stats_new`] and not be used afterwards. NULL is ignored.
 */
void vr_stats_free(struct VrStatsAccumulator *acc);

/**
 * Loads a checkpoint written by `vread train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid.
 */
enum VrStatus vr_model_load(const char *path, struct VrModel **out);

/**
 * Tower probabilities `(P, P')` for a user/item pair. Ids unseen in
 * training share the out-of-vocabulary row.
 *
 * # Safety
 * `model` must come from [`vr_model_load`]; strings NUL-terminated; outputs valid.
 */
enum VrStatus vr_model_forward(const struct VrModel *model,
                               const char *user_id,
                               const char *item_id,
                               double *p,
                               double *p_weighted);

/**
 * Ranking score of the model's objective (`P + P'`, or `P` for the
 * single-tower objective).
 *
 * # Safety
 * `model` must come from [`vr_model_load`]; strings NUL-terminated; `out` valid.
 */
enum VrStatus vr_model_score(const struct VrModel *model,
                             const char *user_id,
                             const char *item_id,
                             double *out);

/**
 * # Safety
 * `model` must come from [`vr_model_load`] and not be used afterwards. NULL is ignored.
 */
void vr_model_free(struct VrModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VREAD_H */

#ifndef KEYRACE_H
#define KEYRACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KrFamily {
  KR_FAMILY_CANONICAL = 0,
  KR_FAMILY_GUMBEL1 = 1,
  KR_FAMILY_FRECHET2 = 2,
  KR_FAMILY_NEG_EXP = 3,
  KR_FAMILY_EXP_MIN = 4,
} KrFamily;

typedef enum KrStatus {
  KR_STATUS_OK = 0,
  KR_STATUS_NULL_POINTER = 1,
  KR_STATUS_DOMAIN = 2,
  KR_STATUS_DEGENERATE_WEIGHT = 3,
  KR_STATUS_NOT_FOUND = 4,
  KR_STATUS_DUPLICATE_ROW = 5,
  KR_STATUS_INVALID_UTF8 = 6,
  KR_STATUS_BUFFER_TOO_SMALL = 7,
  KR_STATUS_INVALID_ARGUMENT = 8,
  KR_STATUS_PANIC = 9,
} KrStatus;

/**
 * Which maintenance path an update took.
 */
typedef enum KrUpdateCase {
  KR_UPDATE_CASE_NEW_WINNER = 0,
  KR_UPDATE_CASE_UNCHANGED = 1,
  KR_UPDATE_CASE_WINNER_REFRESHED = 2,
  KR_UPDATE_CASE_WINNER_RESCANNED = 3,
  KR_UPDATE_CASE_DELETED_NON_WINNER = 4,
  KR_UPDATE_CASE_DELETED_WINNER = 5,
  KR_UPDATE_CASE_GROUP_REMOVED = 6,
} KrUpdateCase;

/**
 * Winners maintained under upserts and deletes.
 */
typedef struct KrDynamic KrDynamic;

/**
 * Batch sampler: collect rows, then draw one winner per group.
 */
typedef struct KrSampler KrSampler;

/**
 * Alias and cumulative tables over a fixed weight vector.
 */
typedef struct KrWeightTable KrWeightTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *kr_last_error_message(void);

/**
 * Key for `strength` and uniform `u` under the given family parameters.
 *
 * # Safety
 * `out` must be null or point to writable memory for one double.
 */
enum KrStatus kr_key(enum KrFamily family,
                     double scale_c,
                     double offset_d,
                     double strength,
                     double u,
                     double *out);

/**
 * The uniform assigned to row `(group_id, label)` under `(seed, replicate)`.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be null or
 * writable.
 */
enum KrStatus kr_derive_uniform(uint64_t seed,
                                uint64_t replicate,
                                const char *group_id,
                                const char *label,
                                double *out);

/**
 * Upper-tail chi-square probability of `statistic` with `df` degrees of freedom.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum KrStatus kr_chi_square_p_value(double statistic, uint32_t df, double *out);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum KrStatus kr_sampler_new(enum KrFamily family,
                             double scale_c,
                             double offset_d,
                             struct KrSampler **out);

/**
 * # Safety
 * `sampler` must be null or a handle from [`kr_sampler_new`] not yet freed.
 */
void kr_sampler_free(struct KrSampler *sampler);

/**
 * Adds a row. The strength is checked against the family immediately.
 *
 * # Safety
 * `sampler` must be a live handle; strings NUL-terminated.
 */
enum KrStatus kr_sampler_add_row(struct KrSampler *sampler,
                                 const char *group_id,
                                 const char *label,
                                 double strength);

/**
 * Draws one winner per group for `(seed, replicate)`, replacing the previous
 * draw. `groups` receives the number of groups. Fails on duplicate rows.
 *
 * # Safety
 * `sampler` must be a live handle; `groups` null or writable.
 */
enum KrStatus kr_sampler_run(struct KrSampler *sampler,
                             uint64_t seed,
                             uint64_t replicate,
                             size_t *groups);

/**
 * Winning label and key of `group_id` from the last run.
 *
 * # Safety
 * `sampler` must be a live handle; `label` must hold `capacity` bytes;
 * `needed` and `key` null or writable.
 */
enum KrStatus kr_sampler_winner(const struct KrSampler *sampler,
                                const char *group_id,
                                char *label,
                                size_t capacity,
                                size_t *needed,
                                double *key);

/**
 * # Safety
 * `out` must be null or writable.
 */
enum KrStatus kr_dynamic_new(enum KrFamily family,
                             double scale_c,
                             double offset_d,
                             uint64_t seed,
                             struct KrDynamic **out);

/**
 * # Safety
 * `table` must be null or a handle from [`kr_dynamic_new`] not yet freed.
 */
void kr_dynamic_free(struct KrDynamic *table);

/**
 * Inserts or rewrites a row. On error the table is unchanged.
 *
 * # Safety
 * `table` must be a live handle; strings NUL-terminated; `case_out` null or
 * writable.
 */
enum KrStatus kr_dynamic_upsert(struct KrDynamic *table,
                                const char *group_id,
                                const char *label,
                                double strength,
                                enum KrUpdateCase *case_out);

/**
 * # Safety
 * As for [`kr_dynamic_upsert`].
 */
enum KrStatus kr_dynamic_delete(struct KrDynamic *table,
                                const char *group_id,
                                const char *label,
                                enum KrUpdateCase *case_out);

/**
 * Current winner of `group_id`.
 *
 * # Safety
 * As for [`kr_sampler_winner`].
 */
enum KrStatus kr_dynamic_winner(const struct KrDynamic *table,
                                const char *group_id,
                                char *label,
                                size_t capacity,
                                size_t *needed,
                                double *key);

/**
 * # Safety
 * `table` must be a live handle; `out` null or writable.
 */
enum KrStatus kr_dynamic_group_count(const struct KrDynamic *table, size_t *out);

/**
 * Builds alias and cumulative tables over `n` labelled positive weights.
 *
 * # Safety
 * `labels` must point to `n` NUL-terminated strings and `weights` to `n`
 * doubles; `out` null or writable.
 */
enum KrStatus kr_weight_table_new(const char *const *labels,
                                  const double *weights,
                                  size_t n,
                                  struct KrWeightTable **out);

/**
 * # Safety
 * `table` must be null or a handle from [`kr_weight_table_new`] not yet freed.
 */
void kr_weight_table_free(struct KrWeightTable *table);

/**
 * Alias-method draw from two uniforms; `index` receives the label position.
 *
 * # Safety
 * `table` must be a live handle; `index` null or writable.
 */
enum KrStatus kr_weight_table_alias(const struct KrWeightTable *table,
                                    double u1,
                                    double u2,
                                    size_t *index);

/**
 * Inverse-CDF draw; `bisection` selects binary rather than linear search.
 *
 * # Safety
 * `table` must be a live handle; `index` null or writable.
 */
enum KrStatus kr_weight_table_inverse(const struct KrWeightTable *table,
                                      double u,
                                      bool bisection,
                                      size_t *index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KEYRACE_H */

#ifndef DYNSYS_H
#define DYNSYS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DsStatus {
  DsStatus_Ok = 0,
  DsStatus_NullPointer = 1,
  DsStatus_InvalidUtf8 = 2,
  DsStatus_Parse = 3,
  DsStatus_Domain = 4,
  DsStatus_Dimension = 5,
  DsStatus_Integration = 6,
  DsStatus_Invalid = 7,
  DsStatus_Panic = 8,
} DsStatus;

typedef enum DsTermination {
  DsTermination_ReachedSpan = 0,
  DsTermination_BlowUp = 1,
  DsTermination_LeftDomain = 2,
} DsTermination;

typedef struct DsExpr DsExpr;

typedef struct DsSystem DsSystem;

typedef struct DsTrajectory DsTrajectory;

/**
 * Result of a relatedness check. `tolerance` is NaN for exact checks.
 */
typedef struct DsCheckReport {
  bool passed;
  bool exact;
  double residual;
  double tolerance;
  uintptr_t samples;
} DsCheckReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Free with
 * [`ds_string_free`].
 */
char *ds_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ds_string_free(char *s);

/**
 * Parses an expression in variables `x1..x{arity}` and `t`.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be writable.
 */
enum DsStatus ds_expr_parse(const char *source, uintptr_t arity, struct DsExpr **out);

/**
 * # Safety
 * `point` must hold `n` values, `n` equal to the arity.
 */
enum DsStatus ds_expr_eval(const struct DsExpr *expr,
                           const double *point,
                           uintptr_t n,
                           double t,
                           double *out);

/**
 * Symbolic partial derivative in `x{var}` (`var` starts at 1).
 *
 * # Safety
 * `expr` must be a live handle; `out` must be writable.
 */
enum DsStatus ds_expr_derivative(const struct DsExpr *expr, uintptr_t var, struct DsExpr **out);

/**
 * Printed form, parseable by [`ds_expr_parse`]. Free with [`ds_string_free`].
 *
 * # Safety
 * `expr` must be a live handle or NULL.
 */
char *ds_expr_to_string(const struct DsExpr *expr);

/**
 * # Safety
 * `expr` must come from this library and not have been freed.
 */
void ds_expr_free(struct DsExpr *expr);

/**
 * Continuous system `ẋ = field(x, t)` on the open box `(lo, hi)`. NULL bounds
 * mean the whole space.
 *
 * # Safety
 * `field` holds `n` strings; `lo`/`hi` are NULL or hold `n` values.
 */
enum DsStatus ds_system_new(const char *const *field,
                            uintptr_t n,
                            const double *lo,
                            const double *hi,
                            struct DsSystem **out);

/**
 * # Safety
 * `system` must be a live handle or NULL (returns 0).
 */
uintptr_t ds_system_dimension(const struct DsSystem *system);

/**
 * # Safety
 * `system` must come from this library and not have been freed.
 */
void ds_system_free(struct DsSystem *system);

/**
 * Integrates from `x0` over `[0, t_end]` (`t_end < 0` runs backward).
 * Non-positive `rtol`/`atol` select the defaults. Early termination still
 * returns `Ok`; inspect [`ds_trajectory_termination`].
 *
 * # Safety
 * `x0` holds `n` values; `out` must be writable.
 */
enum DsStatus ds_integrate(const struct DsSystem *system,
                           const double *x0,
                           uintptr_t n,
                           double t_end,
                           double rtol,
                           double atol,
                           struct DsTrajectory **out);

/**
 * # Safety
 * `traj` must be a live handle or NULL (returns 0).
 */
uintptr_t ds_trajectory_len(const struct DsTrajectory *traj);

/**
 * # Safety
 * `traj` must be a live handle or NULL.
 */
enum DsTermination ds_trajectory_termination(const struct DsTrajectory *traj);

/**
 * Time and state of node `i`. `state` must have room for the dimension.
 *
 * # Safety
 * `time` is writable; `state` holds `n` writable values.
 */
enum DsStatus ds_trajectory_node(const struct DsTrajectory *traj,
                                 uintptr_t i,
                                 double *time,
                                 double *state,
                                 uintptr_t n);

/**
 * Dense-output state at time `t` inside the covered interval.
 *
 * # Safety
 * `state` holds `n` writable values.
 */
enum DsStatus ds_trajectory_state_at(const struct DsTrajectory *traj,
                                     double t,
                                     double *state,
                                     uintptr_t n);

/**
 * # Safety
 * `traj` must come from this library and not have been freed.
 */
void ds_trajectory_free(struct DsTrajectory *traj);

/**
 * Checks `J_f X = Y∘f` at `samples` default sample points (0 selects the
 * default count). `map` holds one expression per target coordinate.
 *
 * # Safety
 * `map` holds `map_len` strings; `out` is writable.
 */
enum DsStatus ds_check_relatedness(const char *const *map,
                                   uintptr_t map_len,
                                   const struct DsSystem *source,
                                   const struct DsSystem *target,
                                   uintptr_t samples,
                                   double tol,
                                   struct DsCheckReport *out);

/**
 * Exact check `β∘α = α∘α_src` for finite systems given as index tables.
 *
 * # Safety
 * Each table holds the stated number of indices; `alpha` holds `src_len`.
 */
enum DsStatus ds_check_discrete_morphism(const uintptr_t *src_table,
                                         uintptr_t src_len,
                                         const uintptr_t *dst_table,
                                         uintptr_t dst_len,
                                         const uintptr_t *alpha,
                                         struct DsCheckReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNSYS_H */

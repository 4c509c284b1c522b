#ifndef KR_STEER_H
#define KR_STEER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `root_choice` for [`krs_plan_two_trailer`]: the `a2` root of least
 * magnitude.
 */
#define KRS_ROOT_MIN_ABS 0

/**
 * The `a2` root of largest magnitude.
 */
#define KRS_ROOT_MAX_ABS 1

typedef enum KrsStatus {
  KRS_STATUS_OK = 0,
  KRS_STATUS_NULL_POINTER = 1,
  KRS_STATUS_INVALID_INPUT = 2,
  KRS_STATUS_DIMENSION_MISMATCH = 3,
  KRS_STATUS_POLE = 4,
  KRS_STATUS_OUTSIDE_DOMAIN = 5,
  KRS_STATUS_DEGENERATE = 6,
  KRS_STATUS_UNREACHABLE = 7,
  KRS_STATUS_BUDGET_EXCEEDED = 8,
  KRS_STATUS_NUMERIC = 9,
  KRS_STATUS_NOT_NILPOTENT = 10,
  KRS_STATUS_BUFFER_TOO_SMALL = 11,
  KRS_STATUS_PANIC = 12,
  KRS_STATUS_OTHER = 13,
} KrsStatus;

/**
 * Opaque conversion chain of the n-trailer system.
 */
typedef struct KrsChain KrsChain;

/**
 * Opaque two-trailer steering plan.
 */
typedef struct KrsPlan KrsPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *krs_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void krs_string_free(char *s);

/**
 * Builds the KR conversion chain for `n` trailers at the configuration
 * `(xi1, xi2, thetas[0..=n])`.
 *
 * # Safety
 * `thetas` must point to `thetas_len` doubles and `out` must be writable.
 */
enum KrsStatus krs_chain_build(size_t n,
                               double xi1,
                               double xi2,
                               const double *thetas,
                               size_t thetas_len,
                               struct KrsChain **out);

/**
 * State dimension `n + 3` of the chain, or 0 for NULL.
 *
 * # Safety
 * `chain` must be NULL or a live handle.
 */
size_t krs_chain_dim(const struct KrsChain *chain);

/**
 * Evaluates the KR coordinates `x1..x_{n+3}` at a trailer state.
 *
 * # Safety
 * `state` and `out` must point to `len` doubles each.
 */
enum KrsStatus krs_chain_forward_map(const struct KrsChain *chain,
                                     const double *state,
                                     double *out,
                                     size_t len);

/**
 * Finite-difference residual of the pushed-forward trailer fields against
 * the KR fields, after feedback, at `state`.
 *
 * # Safety
 * `state` must point to `len` doubles and `residual` must be writable.
 */
enum KrsStatus krs_chain_pushforward_residual(const struct KrsChain *chain,
                                              const double *state,
                                              size_t len,
                                              double *residual);

/**
 * Chain report as JSON; release with [`krs_string_free`].
 *
 * # Safety
 * `chain` must be a live handle and `json` writable.
 */
enum KrsStatus krs_chain_report_json(const struct KrsChain *chain, char **json);

/**
 * # Safety
 * `chain` must be NULL or a handle from [`krs_chain_build`], freed once.
 */
void krs_chain_free(struct KrsChain *chain);

/**
 * Closed-form two-trailer coordinates of `state[5]` into `out[5]`.
 *
 * # Safety
 * `state` and `out` must point to 5 doubles.
 */
enum KrsStatus krs_two_trailer_map(const double *state, double *out);

/**
 * Window `(gamma, delta)` of the two-trailer domain for relative angles
 * `t0 = theta0`, `t1 = theta1 - theta0`.
 *
 * # Safety
 * `gamma` and `delta` must be writable.
 */
enum KrsStatus krs_domain_window(double t0, double t1, double *gamma, double *delta);

/**
 * Whether the KR target `q[5]` is reachable from the origin with the
 * two-trailer polynomial controls.
 *
 * # Safety
 * `q` must point to 5 doubles and `result` must be writable.
 */
enum KrsStatus krs_reachable(const double *q, bool *result);

/**
 * Plans a two-trailer maneuver between states `zeta0[5]` and `zeta_t[5]`.
 * `root_choice` is [`KRS_ROOT_MIN_ABS`] or [`KRS_ROOT_MAX_ABS`].
 *
 * # Safety
 * `zeta0` and `zeta_t` must point to 5 doubles and `out` must be writable.
 */
enum KrsStatus krs_plan_two_trailer(const double *zeta0,
                                    const double *zeta_t,
                                    uint32_t root_choice,
                                    struct KrsPlan **out);

/**
 * Control law of a plan: `u1(t) = sum u1[k] t^k`, constant `u2`, on
 * `[0, horizon]`. `u1_len` always receives the number of coefficients;
 * when `u1_cap` is smaller the call fails with `BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `u1` must point to `u1_cap` doubles; the other outputs must be writable.
 */
enum KrsStatus krs_plan_controls(const struct KrsPlan *plan,
                                 double *u1,
                                 size_t u1_cap,
                                 size_t *u1_len,
                                 double *u2,
                                 double *horizon);

/**
 * Simulates the plan in closed loop with `steps` RK4 steps. `passed` is
 * true when the trajectory stayed in the domain window and met the
 * terminal tolerance.
 *
 * # Safety
 * `plan` must be a live handle; outputs must be writable.
 */
enum KrsStatus krs_plan_verify(const struct KrsPlan *plan,
                               size_t steps,
                               double *terminal_error,
                               bool *passed);

/**
 * The plan as JSON; release with [`krs_string_free`].
 *
 * # Safety
 * `plan` must be a live handle and `json` writable.
 */
enum KrsStatus krs_plan_json(const struct KrsPlan *plan, char **json);

/**
 * # Safety
 * `plan` must be NULL or a handle from [`krs_plan_two_trailer`], freed once.
 */
void krs_plan_free(struct KrsPlan *plan);

/**
 * Nilpotency report of the KR form named by `word` (e.g. `"R(0).S"`) as
 * JSON; release with [`krs_string_free`].
 *
 * # Safety
 * `word` must be a NUL-terminated string and `json` writable.
 */
enum KrsStatus krs_nilpotency_report(const char *word, size_t max_dim, char **json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KR_STEER_H */

#ifndef NSSERIES_H
#define NSSERIES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NsStatus {
  NS_STATUS_OK = 0,
  NS_STATUS_NULL_POINTER = 1,
  NS_STATUS_INVALID_ARGUMENT = 2,
  NS_STATUS_DOMAIN = 3,
  NS_STATUS_GRID_MISMATCH = 4,
  NS_STATUS_DIVERGENCE = 5,
  NS_STATUS_BLOW_UP = 6,
  NS_STATUS_BUDGET = 7,
  NS_STATUS_CONFIG = 8,
  NS_STATUS_IO = 9,
  NS_STATUS_BUFFER_TOO_SMALL = 10,
  NS_STATUS_PANIC = 11,
  NS_STATUS_INTERNAL = 12,
} NsStatus;

typedef struct NsField NsField;

typedef struct NsGrid NsGrid;

typedef struct NsSolution NsSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ns_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library from the same thread.
 */
const char *ns_last_error_message(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum NsStatus ns_grid_new(uint32_t d, double h, double radius, struct NsGrid **out);

/**
 * # Safety
 * `grid` must come from `ns_grid_new`; `out` must be writable.
 */
enum NsStatus ns_grid_len(const struct NsGrid *grid, size_t *out);

/**
 * # Safety
 * `grid` must come from `ns_grid_new` and not be used afterwards. NULL is ignored.
 */
void ns_grid_free(struct NsGrid *grid);

/**
 * Gaussian initial data `amplitude e^{-width|ξ|²} K(ξ)a(ξ)` with the seeded
 * swirl direction.
 *
 * # Safety
 * `grid` must be a live grid handle; `out` must be writable.
 */
enum NsStatus ns_field_gaussian(const struct NsGrid *grid,
                                double amplitude,
                                double width,
                                uint64_t seed,
                                struct NsField **out);

/**
 * Number of complex values (modes times components).
 *
 * # Safety
 * `field` must be a live field handle; `out` must be writable.
 */
enum NsStatus ns_field_len(const struct NsField *field, size_t *out);

/**
 * Copies the values as interleaved `(re, im)` pairs, mode-major with
 * components innermost. `len` counts doubles and must be at least twice
 * `ns_field_len`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum NsStatus ns_field_copy(const struct NsField *field, double *buf, size_t len);

/**
 * `‖f‖_{L¹} + ‖f‖_{L²}` with the lattice measure.
 *
 * # Safety
 * `field` must be a live field handle; `out` must be writable.
 */
enum NsStatus ns_field_norm_1p2(const struct NsField *field, double *out);

/**
 * # Safety
 * `field` must come from this library and not be used afterwards. NULL is ignored.
 */
void ns_field_free(struct NsField *field);

/**
 * Fits the convolution constant on the bump corpus over `grid`.
 *
 * # Safety
 * `grid` must be a live grid handle; `out` must be writable.
 */
enum NsStatus ns_calibrate(const struct NsGrid *grid,
                           size_t corpus_size,
                           uint64_t seed,
                           double *out);

/**
 * # Safety
 * `field` must be a live field handle; `out` must be writable.
 */
enum NsStatus ns_smallness_ratio(const struct NsField *field, double nu, double c_hat, double *out);

/**
 * Computes terms up to `k_max` on `steps` uniform intervals of `[0, t_max]`
 * and sums them up to the tail-rule order. Returns `NS_STATUS_DIVERGENCE`
 * without a handle when the series is predicted to diverge.
 *
 * # Safety
 * `u0` must be a live field handle; `out` must be writable.
 */
enum NsStatus ns_solve(const struct NsField *u0,
                       double nu,
                       double t_max,
                       size_t steps,
                       size_t k_max,
                       double tail_tol,
                       double c_hat,
                       struct NsSolution **out);

/**
 * # Safety
 * `sol` must be a live solution handle; outputs must be writable.
 */
enum NsStatus ns_solution_info(const struct NsSolution *sol, size_t *order, double *rho);

/**
 * Writes up to `len` values of `sup_t ‖v_k‖_{1⊕2}`, `k = 0..=k_max`, and
 * stores the total count in `count`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles (may be NULL when `len` is 0).
 */
enum NsStatus ns_solution_term_norms(const struct NsSolution *sol,
                                     double *buf,
                                     size_t len,
                                     size_t *count);

/**
 * Summed solution at time index `m` as a new field handle.
 *
 * # Safety
 * `sol` must be a live solution handle; `out` must be writable.
 */
enum NsStatus ns_solution_slice(const struct NsSolution *sol, size_t m, struct NsField **out);

/**
 * # Safety
 * `sol` must come from `ns_solve` and not be used afterwards. NULL is ignored.
 */
void ns_solution_free(struct NsSolution *sol);

/**
 * Runs a TOML experiment config and returns its JSON report, to be released
 * with `ns_string_free`. `passed` receives whether every enabled check passed.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; outputs must be writable.
 */
enum NsStatus ns_run_config(const char *path, char **report_json, bool *passed);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. NULL is ignored.
 */
void ns_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSSERIES_H */

#ifndef POLYSHRINK_H
#define POLYSHRINK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define PS_CONVENTION_THEOREM 0

#define PS_CONVENTION_SIMULATION 1

#define PS_METHOD_EXACT_GENERAL 0

#define PS_METHOD_EXACT_CHAINED 1

#define PS_METHOD_MONTE_CARLO 2

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_NON_INTEGRABLE = 2,
  PS_STATUS_TRUNCATION_FAILURE = 3,
  PS_STATUS_DOMAIN_VIOLATION = 4,
  PS_STATUS_DIMENSION_TOO_SMALL = 5,
  PS_STATUS_SINGULAR_OBSERVATION = 6,
  PS_STATUS_LENGTH_MISMATCH = 7,
  PS_STATUS_CONVENTION_UNSUPPORTED = 8,
  PS_STATUS_INVALID_PARAMETER = 9,
  PS_STATUS_BUFFER_TOO_SMALL = 10,
  PS_STATUS_PANIC = 11,
} PsStatus;

/**
 * Opaque estimator handle.
 */
typedef struct PsEstimator PsEstimator;

typedef struct PsRiskReport {
  double risk;
  double ratio_to_mle;
  /**
   * NaN for exact methods.
   */
  double stderr;
  size_t p;
  double lambda;
  double omega;
  /**
   * One of the `PS_METHOD_*` constants.
   */
  uint32_t method;
} PsRiskReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The MLE `x` itself; `omega` is the loss weight.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum PsStatus ps_estimator_mle(double omega, struct PsEstimator **out);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum PsStatus ps_estimator_james_stein(size_t p, double omega, struct PsEstimator **out);

/**
 * Degree 1 to 4 member of the polynomial chain.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum PsStatus ps_estimator_poly(uint32_t degree,
                                size_t p,
                                double omega,
                                uint32_t convention_code,
                                struct PsEstimator **out);

/**
 * Arbitrary coefficients `gamma_1..gamma_n`; `dimension` 0 means untuned.
 *
 * # Safety
 * `coeffs` must point to `n` readable doubles (or may be null when `n` is
 * 0) and `out` must be valid for writes.
 */
enum PsStatus ps_estimator_custom(double omega,
                                  const double *coeffs,
                                  size_t n,
                                  size_t dimension,
                                  struct PsEstimator **out);

/**
 * # Safety
 * `est` must be null or a handle from a `ps_estimator_*` constructor that
 * has not been freed.
 */
void ps_estimator_free(struct PsEstimator *est);

/**
 * Number of coefficients, 0 for a null handle.
 *
 * # Safety
 * `est` must be null or a live handle.
 */
size_t ps_estimator_degree(const struct PsEstimator *est);

/**
 * Copies up to `cap` coefficients into `out` and stores the full count in
 * `len`; returns `BufferTooSmall` if `cap` was insufficient.
 *
 * # Safety
 * `est` must be a live handle, `out` valid for `cap` writes (or null when
 * `cap` is 0) and `len` valid for one write.
 */
enum PsStatus ps_estimator_coeffs(const struct PsEstimator *est,
                                  double *out,
                                  size_t cap,
                                  size_t *len);

/**
 * # Safety
 * `est` must be a live handle and `out` valid for one write.
 */
enum PsStatus ps_estimator_omega(const struct PsEstimator *est, double *out);

/**
 * `1 + sum gamma_m / norm_sq^m`.
 *
 * # Safety
 * `est` must be a live handle and `out` valid for one write.
 */
enum PsStatus ps_shrinkage_factor(const struct PsEstimator *est, double norm_sq, double *out);

/**
 * Applies the estimator to `x[0..n]`, writing `n` values to `out`.
 *
 * # Safety
 * `x` must be readable and `out` writable for `n` doubles; they may alias.
 */
enum PsStatus ps_estimator_apply(const struct PsEstimator *est,
                                 const double *x,
                                 size_t n,
                                 double *out);

/**
 * Exact risk of any estimator with `p > 4M - 2`.
 *
 * # Safety
 * `est` must be a live handle and `out` valid for one write.
 */
enum PsStatus ps_exact_risk_general(const struct PsEstimator *est,
                                    size_t p,
                                    double lambda,
                                    struct PsRiskReport *out);

/**
 * # Safety
 * `out` must be valid for one write.
 */
enum PsStatus ps_exact_risk_js(size_t p, double omega, double lambda, struct PsRiskReport *out);

/**
 * # Safety
 * `out` must be valid for one write.
 */
enum PsStatus ps_exact_risk_chained(uint32_t degree,
                                    size_t p,
                                    double omega,
                                    double lambda,
                                    uint32_t convention_code,
                                    struct PsRiskReport *out);

/**
 * Monte Carlo risks of `n` estimators on common draws; writes `n` reports.
 *
 * # Safety
 * `ests` must point to `n` live handles and `out` be valid for `n` writes.
 */
enum PsStatus ps_simulate_risk(const struct PsEstimator *const *ests,
                               size_t n,
                               size_t p,
                               double lambda,
                               double omega,
                               uint64_t replications,
                               uint64_t seed,
                               struct PsRiskReport *out);

/**
 * `E[U^v]` for `U ~ chi'^2_p(lambda)`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PsStatus ps_ncx2_moment(size_t p, double lambda, double v, double *out);

/**
 * # Safety
 * `out` must be valid for one write.
 */
enum PsStatus ps_ncx2_inverse_moment(size_t p, double lambda, uint32_t m, double *out);

/**
 * `d/d lambda E[U^v]`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PsStatus ps_ncx2_moment_derivative(size_t p, double lambda, double v, double *out);

/**
 * `E[U^r] / E[U^s]`.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum PsStatus ps_moment_ratio(size_t p, double r, double s, double lambda, double *out);

/**
 * # Safety
 * `out` must be valid for one write.
 */
enum PsStatus ps_sup_inverse_ratio(size_t p, double r, double *out);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ps_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ps_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYSHRINK_H */

#ifndef BWLS_H
#define BWLS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum BwlsStatus {
  BWLS_STATUS_OK = 0,
  BWLS_STATUS_NULL_POINTER = 1,
  BWLS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The least-squares or interpolation system is singular.
   */
  BWLS_STATUS_SINGULAR = 3,
  /**
   * Conditioning hit its rejection cap, or an input sample is unstable.
   */
  BWLS_STATUS_UNSTABLE = 4,
  BWLS_STATUS_UNSUPPORTED = 5,
  /**
   * Malformed JSON or UTF-8.
   */
  BWLS_STATUS_PARSE = 6,
  BWLS_STATUS_BUFFER_TOO_SMALL = 7,
  BWLS_STATUS_PANIC = 8,
  BWLS_STATUS_INTERNAL = 9,
} BwlsStatus;

typedef enum BwlsMeasure {
  /**
   * Uniform on [-1, 1], Legendre polynomials.
   */
  BWLS_MEASURE_UNIFORM = 0,
  /**
   * Standard normal, Hermite polynomials.
   */
  BWLS_MEASURE_GAUSSIAN = 1,
} BwlsMeasure;

typedef enum BwlsIndexRule {
  BWLS_INDEX_RULE_TOTAL_DEGREE = 0,
  BWLS_INDEX_RULE_HYPERBOLIC_CROSS = 1,
} BwlsIndexRule;

/**
 * Polynomial space V_m with its orthonormal basis.
 */
typedef struct BwlsBasis BwlsBasis;

/**
 * Fitted expansion.
 */
typedef struct BwlsModel BwlsModel;

/**
 * Weighted point set.
 */
typedef struct BwlsSample BwlsSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a
 * success. Valid until the next call into the library on this thread.
 */
const char *bwls_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bwls_version(void);

/**
 * Releases a string returned by a `*_to_json` call.
 *
 * # Safety
 * `s` must be NULL or a string from this library that was not freed yet.
 */
void bwls_string_free(char *s);

/**
 * Sample size n(delta, eta, m) that makes a draw stable with probability
 * at least 1 - eta.
 *
 * # Safety
 * `out` must point to writable storage for one `size_t`.
 */
enum BwlsStatus bwls_required_sample_size(double delta, double eta, size_t m, size_t *out);

/**
 * Tensor basis on `d` copies of `measure` with index set `rule(p)`.
 *
 * # Safety
 * `out` must point to writable storage for one handle pointer.
 */
enum BwlsStatus bwls_basis_new(enum BwlsMeasure measure,
                               size_t d,
                               enum BwlsIndexRule rule,
                               size_t p,
                               struct BwlsBasis **out);

/**
 * Basis from a JSON descriptor, e.g.
 * `{"measure":"uniform","d":2,"rule":"hyperbolic_cross","p":9}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum BwlsStatus bwls_basis_from_json(const char *json, struct BwlsBasis **out);

/**
 * # Safety
 * `basis` must be NULL or a live handle; it is invalid afterwards.
 */
void bwls_basis_free(struct BwlsBasis *basis);

/**
 * Dimension m of the space.
 *
 * # Safety
 * `basis` must be a live handle and `out` writable.
 */
enum BwlsStatus bwls_basis_size(const struct BwlsBasis *basis, size_t *out);

/**
 * Number of variables d.
 *
 * # Safety
 * `basis` must be a live handle and `out` writable.
 */
enum BwlsStatus bwls_basis_dim(const struct BwlsBasis *basis, size_t *out);

/**
 * Writes the m basis values at `x` (length d) into `values`.
 *
 * # Safety
 * `x` holds `d` doubles; `values` has room for `capacity` doubles.
 */
enum BwlsStatus bwls_basis_eval(const struct BwlsBasis *basis,
                                const double *x,
                                size_t d,
                                double *values,
                                size_t capacity);

/**
 * Builds a design with the guaranteed-stability sample size.
 * `method` is one of `sls`, `owls`, `bls:M`, `cbls:M`, `sbls:M`, `gauss`,
 * `leja`, `fekete`, `magic`. `boost` is used when the method gives no M.
 *
 * # Safety
 * `basis` live, `method` NUL-terminated, `out` writable.
 */
enum BwlsStatus bwls_design_new(const struct BwlsBasis *basis,
                                const char *method,
                                double delta,
                                double eta,
                                size_t boost,
                                uint64_t seed,
                                struct BwlsSample **out);

/**
 * Sample from caller-provided points (row-major, n x d) with optimal weights.
 *
 * # Safety
 * `points` holds `n * d` doubles; `out` writable.
 */
enum BwlsStatus bwls_sample_from_points(const struct BwlsBasis *basis,
                                        const double *points,
                                        size_t n,
                                        size_t d,
                                        struct BwlsSample **out);

/**
 * # Safety
 * `sample` must be NULL or a live handle; it is invalid afterwards.
 */
void bwls_sample_free(struct BwlsSample *sample);

/**
 * Number of points n.
 *
 * # Safety
 * `sample` live, `out` writable.
 */
enum BwlsStatus bwls_sample_len(const struct BwlsSample *sample, size_t *out);

/**
 * Copies the points, row-major n x d, into `buffer`.
 *
 * # Safety
 * `buffer` has room for `capacity` doubles.
 */
enum BwlsStatus bwls_sample_points(const struct BwlsSample *sample,
                                   double *buffer,
                                   size_t capacity);

/**
 * Copies the n weights into `buffer`.
 *
 * # Safety
 * `buffer` has room for `capacity` doubles.
 */
enum BwlsStatus bwls_sample_weights(const struct BwlsSample *sample,
                                    double *buffer,
                                    size_t capacity);

/**
 * Deviation Z = ||G - I|| of the sample's Gram matrix in `basis`.
 *
 * # Safety
 * Handles live, `out` writable.
 */
enum BwlsStatus bwls_sample_stability(const struct BwlsSample *sample,
                                      const struct BwlsBasis *basis,
                                      double *out);

/**
 * JSON serialization; release with [`bwls_string_free`].
 *
 * # Safety
 * `sample` live, `out` writable.
 */
enum BwlsStatus bwls_sample_to_json(const struct BwlsSample *sample, char **out);

/**
 * Weighted least-squares fit of `values` (one per sample point).
 *
 * # Safety
 * Handles live, `values` holds `n` doubles, `out` writable.
 */
enum BwlsStatus bwls_fit(const struct BwlsBasis *basis,
                         const struct BwlsSample *sample,
                         const double *values,
                         size_t n,
                         struct BwlsModel **out);

/**
 * # Safety
 * `model` must be NULL or a live handle; it is invalid afterwards.
 */
void bwls_model_free(struct BwlsModel *model);

/**
 * Copies the m coefficients into `buffer`.
 *
 * # Safety
 * `buffer` has room for `capacity` doubles.
 */
enum BwlsStatus bwls_model_coefficients(const struct BwlsModel *model,
                                        double *buffer,
                                        size_t capacity);

/**
 * Evaluates the fitted expansion at `x` (length d).
 *
 * # Safety
 * `x` holds `d` doubles; `out` writable.
 */
enum BwlsStatus bwls_model_eval(const struct BwlsModel *model,
                                const double *x,
                                size_t d,
                                double *out);

/**
 * JSON serialization; release with [`bwls_string_free`].
 *
 * # Safety
 * `model` live, `out` writable.
 */
enum BwlsStatus bwls_model_to_json(const struct BwlsModel *model, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BWLS_H */

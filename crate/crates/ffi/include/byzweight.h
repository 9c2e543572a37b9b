#ifndef BYZWEIGHT_H
#define BYZWEIGHT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BwStatus {
  BW_STATUS_OK = 0,
  BW_STATUS_NULL_POINTER = 1,
  BW_STATUS_INVALID_ARGUMENT = 2,
  BW_STATUS_PARSE = 3,
  BW_STATUS_INFEASIBLE = 4,
  BW_STATUS_OUT_OF_RANGE = 5,
  BW_STATUS_PANIC = 6,
  BW_STATUS_INTERNAL = 7,
} BwStatus;

typedef enum BwTruncation {
  /**
   * A finite cap `U*` was found.
   */
  BW_TRUNCATION_SOLVED = 0,
  /**
   * The bound already holds without capping anything.
   */
  BW_TRUNCATION_NO_TRUNCATION_NEEDED = 1,
  /**
   * No cap satisfies the bound.
   */
  BW_TRUNCATION_INFEASIBLE = 2,
} BwTruncation;

/**
 * Opaque list of `(alpha, U*)` pairs.
 */
typedef struct BwTradeoff BwTradeoff;

/**
 * Opaque sorted vector of client weights.
 */
typedef struct BwWeights BwWeights;

/**
 * An exact proportion `num / den`.
 */
typedef struct BwRatio {
  uint64_t num;
  uint64_t den;
} BwRatio;

typedef struct BwCertificate {
  bool certified;
  /**
   * `+inf` when the lower bound on the mean is not positive.
   */
  double lhs;
  double eps1;
  double eps2;
  double eps3;
  double top_mean;
  double sample_mean;
} BwCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *bw_last_error_message(void);

/**
 * Free a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void bw_string_free(char *s);

/**
 * Build a weight vector from `len` values. The handle stores them sorted.
 *
 * # Safety
 * `values` must point to `len` readable integers; `out` must be writable.
 */
enum BwStatus bw_weights_new(const uint64_t *values, size_t len, struct BwWeights **out);

/**
 * Parse a weights file body: one integer per line, `#` comments allowed.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum BwStatus bw_weights_parse(const char *text, struct BwWeights **out);

/**
 * # Safety
 * `w` must be null or a handle from this library that has not been freed.
 */
void bw_weights_free(struct BwWeights *w);

/**
 * Number of clients, 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle.
 */
size_t bw_weights_len(const struct BwWeights *w);

/**
 * The `index`-th smallest weight.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum BwStatus bw_weights_get(const struct BwWeights *w, size_t index, uint64_t *out);

/**
 * Maximal weight proportion of the heaviest `p` fraction of clients, as a
 * double.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum BwStatus bw_mwp(const struct BwWeights *w, struct BwRatio p, double *out);

/**
 * Exact maximal weight proportion as a `"num/den"` string to release with
 * [`bw_string_free`].
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum BwStatus bw_mwp_exact(const struct BwWeights *w, struct BwRatio p, char **out);

/**
 * Largest cap `U*` with `mwp(trunc(w, U*), alpha) <= alpha_star`. `out_u` is
 * written only when the outcome is `BW_TRUNCATION_SOLVED`.
 *
 * # Safety
 * `w` must be a live handle; `out_status` must be writable; `out_u` may be null.
 */
enum BwStatus bw_solve_u_star(const struct BwWeights *w,
                              struct BwRatio alpha,
                              struct BwRatio alpha_star,
                              enum BwTruncation *out_status,
                              uint64_t *out_u);

/**
 * New handle with every weight capped at `cap`.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum BwStatus bw_truncate(const struct BwWeights *w, uint64_t cap, struct BwWeights **out);

/**
 * `(alpha, U*)` pairs for `alpha_star`, alpha decreasing over the grid `j/K`.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum BwStatus bw_tradeoff_new(const struct BwWeights *w,
                              struct BwRatio alpha_star,
                              struct BwTradeoff **out);

/**
 * # Safety
 * `t` must be null or a handle from this library that has not been freed.
 */
void bw_tradeoff_free(struct BwTradeoff *t);

/**
 * Number of pairs, 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
size_t bw_tradeoff_len(const struct BwTradeoff *t);

/**
 * # Safety
 * `t` must be a live handle; both outputs must be writable.
 */
enum BwStatus bw_tradeoff_get(const struct BwTradeoff *t,
                              size_t index,
                              struct BwRatio *out_alpha,
                              uint64_t *out_u);

/**
 * The curve as `alpha,u_star` CSV, released with [`bw_string_free`].
 *
 * # Safety
 * `t` must be a live handle; `out` must be writable.
 */
enum BwStatus bw_tradeoff_csv(const struct BwTradeoff *t, char **out);

/**
 * Check the sampled-weight certificate on `len` truncated sizes.
 *
 * # Safety
 * `sample` must point to `len` readable integers; `out` must be writable.
 */
enum BwStatus bw_certify_sample(const uint64_t *sample,
                                size_t len,
                                struct BwRatio alpha,
                                struct BwRatio alpha_star,
                                double delta,
                                uint64_t cap,
                                struct BwCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BYZWEIGHT_H */

#ifndef FHBOUNDS_H
#define FHBOUNDS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FhbStatus {
  FHB_STATUS_OK = 0,
  FHB_STATUS_NULL_POINTER = 1,
  FHB_STATUS_INVALID_UTF8 = 2,
  FHB_STATUS_PARSE = 3,
  FHB_STATUS_VALIDATION = 4,
  /**
   * A price lies outside its single-derivative interval.
   */
  FHB_STATUS_INFEASIBLE = 5,
  FHB_STATUS_UNSUPPORTED = 6,
  FHB_STATUS_NUMERICAL = 7,
  FHB_STATUS_PANIC = 8,
} FhbStatus;

typedef enum FhbVerdict {
  FHB_VERDICT_NO_DECISION = 0,
  FHB_VERDICT_ARBITRAGE = 1,
} FhbVerdict;

/**
 * Opaque market handle.
 */
typedef struct FhbMarket FhbMarket;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a market from a JSON spec. On success `*out` owns a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FhbStatus fhb_market_from_json(const char *json, struct FhbMarket **out);

/**
 * Releases a market handle. Null is ignored.
 *
 * # Safety
 * `market` must come from `fhb_market_from_json` and not be used afterwards.
 */
void fhb_market_free(struct FhbMarket *market);

/**
 * Number of assets.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FhbStatus fhb_market_dimension(const struct FhbMarket *market, size_t *out);

/**
 * Number of derivatives.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FhbStatus fhb_market_num_derivatives(const struct FhbMarket *market, size_t *out);

/**
 * No-arbitrage price interval of derivative `k` taken on its own.
 *
 * # Safety
 * Pointers must be valid.
 */
enum FhbStatus fhb_price_interval(const struct FhbMarket *market,
                                  size_t k,
                                  double *lower,
                                  double *upper);

/**
 * Gap between the upper and lower price-constrained envelopes at `u`.
 *
 * # Safety
 * `prices` must hold `n_prices` values and `u` must hold `dim` values.
 */
enum FhbStatus fhb_fobj(const struct FhbMarket *market,
                        const double *prices,
                        size_t n_prices,
                        const double *u,
                        size_t dim,
                        double *out);

/**
 * Runs grid detection (with optional refinement). The verdict is written to
 * `*verdict`; if `report_json` is non-null it receives the full report as a
 * JSON string to be released with `fhb_string_free`.
 *
 * # Safety
 * `prices` must hold `n_prices` values; other pointers must be valid or
 * (for `report_json`) null.
 */
enum FhbStatus fhb_detect(const struct FhbMarket *market,
                          const double *prices,
                          size_t n_prices,
                          size_t grid_n,
                          bool refine,
                          enum FhbVerdict *verdict,
                          char **report_json);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *fhb_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void fhb_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FHBOUNDS_H */

#ifndef RANDLAT_H
#define RANDLAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum RandlatStatus {
  RANDLAT_STATUS_OK = 0,
  RANDLAT_STATUS_INVALID_ARGUMENT = 1,
  RANDLAT_STATUS_NULL_POINTER = 2,
  RANDLAT_STATUS_NOT_PRIME = 3,
  RANDLAT_STATUS_DIMENSION_MISMATCH = 4,
  RANDLAT_STATUS_UNSUPPORTED = 5,
  RANDLAT_STATUS_BUDGET_EXCEEDED = 6,
  RANDLAT_STATUS_DRAW_FAILED = 7,
  RANDLAT_STATUS_CALLBACK_FAILED = 8,
  RANDLAT_STATUS_BUFFER_TOO_SMALL = 9,
  RANDLAT_STATUS_INTERNAL = 10,
} RandlatStatus;

/**
 * How a merit value was computed.
 */
typedef enum RandlatMeritMethod {
  RANDLAT_MERIT_METHOD_CLOSED_FORM = 0,
  RANDLAT_MERIT_METHOD_HURWITZ_KERNEL = 1,
  RANDLAT_MERIT_METHOD_TRUNCATED_ORACLE = 2,
} RandlatMeritMethod;

/**
 * Rank-1 lattice rule with prime modulus.
 */
typedef struct RandlatRule RandlatRule;

/**
 * Randomized lattice-rule sampler for a fixed `n` and space.
 */
typedef struct RandlatSampler RandlatSampler;

/**
 * Weighted Korobov space: dimension, smoothness and weights.
 */
typedef struct RandlatSpace RandlatSpace;

/**
 * Integrand: receives a point of length `d` and the user pointer.
 * Returning a non-finite value is reported as `CallbackFailed`.
 */
typedef double (*RandlatIntegrand)(const double *x, size_t d, void *user);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *randlat_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *randlat_version(void);

/**
 * Creates a space with `d` dimensions, smoothness `alpha` and `d` weights.
 *
 * # Safety
 * `gammas` must point to `d` doubles and `out_space` must be writable.
 */
enum RandlatStatus randlat_space_new(size_t d,
                                     double alpha,
                                     const double *gammas,
                                     struct RandlatSpace **out_space);

/**
 * # Safety
 * `space` must come from [`randlat_space_new`] and not be used afterwards.
 */
void randlat_space_free(struct RandlatSpace *space);

/**
 * Creates the rule with prime modulus `p` and generating vector `z` of length `d`.
 *
 * # Safety
 * `z` must point to `d` values and `out_rule` must be writable.
 */
enum RandlatStatus randlat_rule_new(uint64_t p,
                                    const uint64_t *z,
                                    size_t d,
                                    struct RandlatRule **out_rule);

/**
 * # Safety
 * `rule` must come from a `randlat` constructor and not be used afterwards.
 */
void randlat_rule_free(struct RandlatRule *rule);

/**
 * Modulus of `rule`, or 0 for a null handle.
 *
 * # Safety
 * `rule` must be null or a live handle.
 */
uint64_t randlat_rule_p(const struct RandlatRule *rule);

/**
 * Dimension of `rule`, or 0 for a null handle.
 *
 * # Safety
 * `rule` must be null or a live handle.
 */
size_t randlat_rule_d(const struct RandlatRule *rule);

/**
 * Writes the generating vector into `z`, which holds `len >= d` values.
 *
 * # Safety
 * `z` must be writable for `len` values.
 */
enum RandlatStatus randlat_rule_z(const struct RandlatRule *rule, uint64_t *z, size_t len);

/**
 * Writes the `p` points row by row into `points` (`p * d` doubles).
 *
 * # Safety
 * `points` must be writable for `len` doubles.
 */
enum RandlatStatus randlat_rule_points(const struct RandlatRule *rule, double *points, size_t len);

/**
 * Applies the rule to `f`, optionally shifted by `shift` (null for none).
 *
 * # Safety
 * `shift` must be null or hold `d` doubles; `f` must be safe to call
 * concurrently with `user`.
 */
enum RandlatStatus randlat_rule_apply(const struct RandlatRule *rule,
                                      const double *shift,
                                      RandlatIntegrand f,
                                      void *user,
                                      double *out_value);

/**
 * `P_{β,γ}(p, z)` of `rule` with `d` weights. `out_tail` (nullable) receives
 * the certified tail bound, zero unless the truncated oracle was used.
 *
 * # Safety
 * `gammas` must hold the rule's `d` weights; outputs must be writable or null
 * where stated.
 */
enum RandlatStatus randlat_merit(const struct RandlatRule *rule,
                                 double beta,
                                 const double *gammas,
                                 double *out_value,
                                 double *out_tail,
                                 enum RandlatMeritMethod *out_method);

/**
 * Worst-case error of `rule` in `space`.
 *
 * # Safety
 * Handles must be live and `out_value` writable.
 */
enum RandlatStatus randlat_worst_case_error(const struct RandlatRule *rule,
                                            const struct RandlatSpace *space,
                                            double *out_value);

/**
 * Zaremba-type index `ρ` of `rule` in `space`, enumerating at most `search_cap` vectors.
 *
 * # Safety
 * Handles must be live and `out_value` writable.
 */
enum RandlatStatus randlat_rho(const struct RandlatRule *rule,
                               const struct RandlatSpace *space,
                               uint64_t search_cap,
                               double *out_value);

/**
 * Primes in `(n/2, n]` in increasing order. `out_count` always receives the
 * count; the primes are written when `primes` is non-null and `len` suffices.
 *
 * # Safety
 * `primes` must be null or writable for `len` values.
 */
enum RandlatStatus randlat_sieve(uint64_t n, uint64_t *primes, size_t len, size_t *out_count);

/**
 * Sampler for budget `n`. `try_cap` bounds the rejection loop per draw.
 *
 * # Safety
 * `space` must be live and `out_sampler` writable.
 */
enum RandlatStatus randlat_sampler_new(uint64_t n,
                                       const struct RandlatSpace *space,
                                       double lambda,
                                       double delta,
                                       double tau,
                                       bool shifted,
                                       uint32_t try_cap,
                                       struct RandlatSampler **out_sampler);

/**
 * # Safety
 * `sampler` must come from [`randlat_sampler_new`] and not be used afterwards.
 */
void randlat_sampler_free(struct RandlatSampler *sampler);

/**
 * One draw from stream `(seed, stream)`. Returns a new rule handle; the shift
 * (if the sampler is shifted and `out_shift` is non-null) fills `d` doubles.
 *
 * # Safety
 * `out_shift` must be null or writable for `d` doubles; other outputs
 * writable or null where stated.
 */
enum RandlatStatus randlat_sampler_draw(const struct RandlatSampler *sampler,
                                        uint64_t seed,
                                        uint64_t stream,
                                        struct RandlatRule **out_rule,
                                        double *out_shift,
                                        uint32_t *out_tries);

/**
 * One realization of the randomized algorithm on `f`, from stream
 * `(seed, stream)`. `out_p` and `out_tries` are optional.
 *
 * # Safety
 * `f` must be safe to call concurrently with `user`; outputs writable or null
 * where stated.
 */
enum RandlatStatus randlat_sampler_integrate(const struct RandlatSampler *sampler,
                                             RandlatIntegrand f,
                                             void *user,
                                             uint64_t seed,
                                             uint64_t stream,
                                             double *out_value,
                                             uint64_t *out_p,
                                             uint32_t *out_tries);

/**
 * Smallest `n` whose error bound is at most `epsilon`, with constant `c`.
 *
 * # Safety
 * `space` must be live and `out_n` writable.
 */
enum RandlatStatus randlat_sufficient_n(double epsilon,
                                        const struct RandlatSpace *space,
                                        double lambda,
                                        double delta,
                                        double tau,
                                        bool shifted,
                                        double c,
                                        uint64_t *out_n);

/**
 * Component-by-component rule with modulus `p` for `space`.
 *
 * # Safety
 * `space` must be live and `out_rule` writable.
 */
enum RandlatStatus randlat_cbc(uint64_t p,
                               const struct RandlatSpace *space,
                               struct RandlatRule **out_rule);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDLAT_H */

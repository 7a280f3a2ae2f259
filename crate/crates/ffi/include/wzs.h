#ifndef WZS_H
#define WZS_H

/* Generated by cbindgen from the wzs-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum WzsStatus {
  WzsStatus_Ok = 0,
  /**
   * A null pointer, unparseable string, or out-of-range argument.
   */
  WzsStatus_InvalidArgument = 1,
  /**
   * The inputs are outside the supported domain (for example an even
   * modulus for the units family).
   */
  WzsStatus_DomainRejected = 2,
  /**
   * The search stopped at its node budget before settling the answer.
   */
  WzsStatus_BudgetExhausted = 3,
  WzsStatus_InternalError = 4,
} WzsStatus;

/**
 * A modulus with its factorization.
 */
typedef struct WzsContext WzsContext;

/**
 * A finite sequence of residues.
 */
typedef struct WzsSeq WzsSeq;

/**
 * A materialized weight set over some modulus.
 */
typedef struct WzsWeights WzsWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message describing the most recent failure on this thread, or null.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *wzs_last_error(void);

/**
 * Creates a context for the modulus `n >= 2`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WzsStatus wzs_context_new(uint64_t n, struct WzsContext **out);

/**
 * Frees a context handle (null is a no-op).
 */
void wzs_context_free(struct WzsContext *ctx);

/**
 * Parses a weight set over `Z_n` from the textual syntax `one`, `units`,
 * `units^2`, `units^3`, `nonzero`, or `set:1,4,...`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WzsStatus wzs_weights_new(uint64_t n, const char *spec, struct WzsWeights **out);

/**
 * Frees a weight-set handle (null is a no-op).
 */
void wzs_weights_free(struct WzsWeights *weights);

/**
 * Creates a sequence over `Z_n` from `len` terms, each in `[0, n)`.
 *
 * # Safety
 * `terms` must point to `len` readable values; `out` must be valid.
 */
enum WzsStatus wzs_seq_new(uint64_t n, const uint64_t *terms, size_t len, struct WzsSeq **out);

/**
 * Frees a sequence handle (null is a no-op).
 */
void wzs_seq_free(struct WzsSeq *seq);

/**
 * The number of terms.
 *
 * # Safety
 * `seq` must be a live handle; `out` must be valid.
 */
enum WzsStatus wzs_seq_len(const struct WzsSeq *seq, size_t *out);

/**
 * Copies the terms into `buf`, which must hold at least `buf_len >= len`
 * values.
 *
 * # Safety
 * `seq` must be a live handle; `buf` must point to `buf_len` writable
 * values.
 */
enum WzsStatus wzs_seq_terms(const struct WzsSeq *seq, uint64_t *buf, size_t buf_len);

/**
 * Finds the first zero window (ordered by end, then start). `*found` tells
 * whether `*start` / `*end` are meaningful.
 *
 * # Safety
 * All handles must be live and all output pointers valid.
 */
enum WzsStatus wzs_zero_window(const struct WzsSeq *seq,
                               const struct WzsWeights *weights,
                               bool *found,
                               size_t *start,
                               size_t *end);

/**
 * True iff the full sequence is an A-weighted zero-sum sequence.
 *
 * # Safety
 * All handles must be live and `out` valid.
 */
enum WzsStatus wzs_is_zero_sum(const struct WzsSeq *seq,
                               const struct WzsWeights *weights,
                               bool *out);

/**
 * Computes `C_A(n)` by exhaustive pruned search. `max_nodes = 0` means
 * unlimited. On [`WzsStatus::BudgetExhausted`], `*constant` holds the
 * verified lower bound instead.
 *
 * # Safety
 * All handles must be live and output pointers valid.
 */
enum WzsStatus wzs_constant(const struct WzsContext *ctx,
                            const struct WzsWeights *weights,
                            uint64_t max_nodes,
                            uint64_t *constant,
                            uint64_t *nodes_visited);

/**
 * True iff the sequence has length `constant - 1` and no zero window.
 *
 * # Safety
 * All handles must be live and `out` valid.
 */
enum WzsStatus wzs_is_extremal(const struct WzsSeq *seq,
                               const struct WzsWeights *weights,
                               uint64_t constant,
                               bool *out);

/**
 * Canonicalizes under A-equivalence: writes the canonical terms (same
 * length as the sequence) and the orbit size. Fails with
 * [`WzsStatus::DomainRejected`] when the orbit size exceeds `u64`.
 *
 * # Safety
 * All handles must be live; `canonical` must hold `len` writable values.
 */
enum WzsStatus wzs_canonicalize(const struct WzsSeq *seq,
                                const struct WzsWeights *weights,
                                uint64_t *canonical,
                                uint64_t *orbit_size);

/**
 * Builds a random extremal sequence for the family (`one`, `units`,
 * `units^2`, `units^3`) over `Z_n`, reproducible from the seed.
 *
 * # Safety
 * `family` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WzsStatus wzs_build_random(const char *family, uint64_t n, uint64_t seed, struct WzsSeq **out);

/**
 * Decomposes an extremal sequence into its structural certificate, returned
 * as a JSON string to be freed with [`wzs_string_free`].
 *
 * # Safety
 * `family` must be a NUL-terminated string, `seq` a live handle, `out` a
 * valid pointer.
 */
enum WzsStatus wzs_decompose_json(uint64_t n,
                                  const char *family,
                                  const struct WzsSeq *seq,
                                  char **out);

/**
 * Frees a string returned by this library (null is a no-op).
 */
void wzs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WZS_H */

#ifndef HYPERPAIR_H
#define HYPERPAIR_H

/* Generated by cbindgen from crates/hyperpair-ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum HpStatus {
  HP_STATUS_OK = 0,
  HP_STATUS_NULL_POINTER = 1,
  HP_STATUS_INVALID_UTF8 = 2,
  HP_STATUS_PARSE = 3,
  HP_STATUS_INVALID_ARGUMENT = 4,
  HP_STATUS_NOT_ISOMETRY = 5,
  HP_STATUS_NOT_LOXODROMIC = 6,
  HP_STATUS_DEGENERATE = 7,
  HP_STATUS_NOT_GENERIC = 8,
  HP_STATUS_VERIFICATION_FAILED = 9,
  HP_STATUS_GLUING = 10,
  HP_STATUS_GENERATION_EXHAUSTED = 11,
  HP_STATUS_INTERNAL = 12,
} HpStatus;

typedef enum HpField {
  HP_FIELD_COMPLEX = 0,
  HP_FIELD_QUATERNION = 1,
} HpField;

typedef enum HpMode {
  HP_MODE_WEAK = 0,
  HP_MODE_STRONG = 1,
} HpMode;

/**
 * Result of a conjugacy test.
 */
typedef struct HpConjugacy HpConjugacy;

/**
 * Invariant tuple of a pair.
 */
typedef struct HpInvariants HpInvariants;

/**
 * A pair of isometries with its space.
 */
typedef struct HpPair HpPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *hp_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void hp_string_free(char *s);

/**
 * Parses a pair from JSON `{"space": {...}, "a": [...], "b": [...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HpStatus hp_pair_from_json(const char *json, struct HpPair **out);

/**
 * Seeded random pair satisfying `mode`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HpStatus hp_pair_generate(size_t n,
                               enum HpField field,
                               uint64_t seed,
                               enum HpMode mode,
                               struct HpPair **out);

/**
 * The pair conjugated by a random isometry drawn from `seed`.
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum HpStatus hp_pair_conjugate_random(const struct HpPair *pair,
                                       uint64_t seed,
                                       struct HpPair **out);

/**
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum HpStatus hp_pair_to_json(const struct HpPair *pair, char **out);

/**
 * # Safety
 * `pair` must come from this library and not be freed twice.
 */
void hp_pair_free(struct HpPair *pair);

/**
 * Invariant tuple of a pair satisfying `mode`. `tol = 0` selects the
 * default genericity tolerance.
 *
 * # Safety
 * `pair` must be a live handle; `out` must be writable.
 */
enum HpStatus hp_invariants_compute(const struct HpPair *pair,
                                    enum HpMode mode,
                                    double tol,
                                    struct HpInvariants **out);

/**
 * # Safety
 * `inv` must be a live handle; `out` must be writable.
 */
enum HpStatus hp_invariants_to_json(const struct HpInvariants *inv, char **out);

/**
 * Cartan angular invariants of the four fixed points; `out` holds 3 values.
 *
 * # Safety
 * `inv` must be a live handle; `out` must point to 3 writable doubles.
 */
enum HpStatus hp_invariants_angular(const struct HpInvariants *inv, double *out);

/**
 * # Safety
 * `inv` must come from this library and not be freed twice.
 */
void hp_invariants_free(struct HpInvariants *inv);

/**
 * Decides whether `q` is conjugate to `p`. `tol = 0` selects the default.
 *
 * # Safety
 * `p`, `q` must be live handles; `out` must be writable.
 */
enum HpStatus hp_conjugacy_test(const struct HpPair *p,
                                const struct HpPair *q,
                                enum HpMode mode,
                                double tol,
                                struct HpConjugacy **out);

/**
 * 1 when conjugate, 0 when not, -1 on a null handle.
 *
 * # Safety
 * `c` must be a live handle or NULL.
 */
int32_t hp_conjugacy_is_conjugate(const struct HpConjugacy *c);

/**
 * Conjugation residual, or the mismatch that stopped the test. NaN on a null handle.
 *
 * # Safety
 * `c` must be a live handle or NULL.
 */
double hp_conjugacy_residual(const struct HpConjugacy *c);

/**
 * Static name of the deciding stage, or NULL on a null handle.
 *
 * # Safety
 * `c` must be a live handle or NULL.
 */
const char *hp_conjugacy_stage(const struct HpConjugacy *c);

/**
 * # Safety
 * `c` must be a live handle; `out` must be writable.
 */
enum HpStatus hp_conjugacy_to_json(const struct HpConjugacy *c, char **out);

/**
 * # Safety
 * `c` must come from this library and not be freed twice.
 */
void hp_conjugacy_free(struct HpConjugacy *c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERPAIR_H */

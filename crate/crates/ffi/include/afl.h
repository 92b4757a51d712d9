#ifndef AFL_H
#define AFL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum AflStatus {
  AFL_STATUS_OK = 0,
  AFL_STATUS_NULL_POINTER = 1,
  AFL_STATUS_INVALID_ARGUMENT = 2,
  AFL_STATUS_NUMERICAL = 3,
  AFL_STATUS_PARSE = 4,
  AFL_STATUS_IO = 5,
  AFL_STATUS_OUT_OF_RANGE = 6,
  AFL_STATUS_PANIC = 7,
} AflStatus;

// A coefficient grid `lambda_{mu k}`.
typedef struct AflCoefficients AflCoefficients;

// A frame `(n, mu_max, k_max)`.
typedef struct AflFrame AflFrame;

// A radial profile.
typedef struct AflProfile AflProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. Valid until the next
// failing call on the same thread.
const char *afl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *afl_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void afl_string_free(char *s);

// `J_nu(x)` for `0 <= nu <= 50`, `x >= 0`.
//
// # Safety
// `out_value` must be valid for writes.
enum AflStatus afl_bessel_j(double nu, double x, double *out_value);

// Writes `j_{nu,1..count}` into `out_zeros`, which must hold `count` values.
//
// # Safety
// `out_zeros` must be valid for `count` writes.
enum AflStatus afl_bessel_zeros(double nu, size_t count, double *out_zeros);

// Builds (or reuses) the frame with the given truncation.
//
// # Safety
// `out_frame` must be valid for writes.
enum AflStatus afl_frame_new(uint32_t n,
                             uint32_t mu_max,
                             uint32_t k_max,
                             struct AflFrame **out_frame);

// # Safety
// `frame` must come from [`afl_frame_new`] and not have been freed. NULL is ignored.
void afl_frame_free(struct AflFrame *frame);

// Parses a profile from its JSON form.
//
// # Safety
// `json` must be a NUL-terminated string; `out_profile` must be valid for writes.
enum AflStatus afl_profile_from_json(const char *json, struct AflProfile **out_profile);

// `exp(-(scale r)^2 / 2)` on `R^n`.
//
// # Safety
// `out_profile` must be valid for writes.
enum AflStatus afl_profile_gaussian(uint32_t n, double scale, struct AflProfile **out_profile);

// # Safety
// `profile` must be a live handle; `out_value` valid for writes.
enum AflStatus afl_profile_value(const struct AflProfile *profile, double r, double *out_value);

// # Safety
// `profile` must come from this library and not have been freed. NULL is ignored.
void afl_profile_free(struct AflProfile *profile);

// Truncated Besov or Triebel-Lizorkin norm; `space_json` holds the space
// parameters (`kind`, `s`, `p`, `q`, `n`, `weight`).
//
// # Safety
// Pointers must be valid; `space_json` NUL-terminated.
enum AflStatus afl_space_norm(const struct AflProfile *profile,
                              const char *space_json,
                              uint32_t mu_max,
                              double *out_value);

// Frame coefficients `S f`.
//
// # Safety
// Handles must be live; `out_coefficients` valid for writes.
enum AflStatus afl_analyze(const struct AflFrame *frame,
                           const struct AflProfile *profile,
                           struct AflCoefficients **out_coefficients);

// Number of stored coefficients, `(mu_max + 1) * k_max`.
//
// # Safety
// Pointers must be valid.
enum AflStatus afl_coefficients_len(const struct AflCoefficients *coefficients, size_t *out_len);

// `lambda_{mu k}`, `0 <= mu <= mu_max`, `1 <= k <= k_max`.
//
// # Safety
// Pointers must be valid.
enum AflStatus afl_coefficients_get(const struct AflCoefficients *coefficients,
                                    uint32_t mu,
                                    uint32_t k,
                                    double *out_value);

// Copies the coefficients, `mu`-major, into `buffer` of length `len`.
//
// # Safety
// `buffer` must be valid for `len` writes.
enum AflStatus afl_coefficients_copy(const struct AflCoefficients *coefficients,
                                     double *buffer,
                                     size_t len);

// `||T lambda - f||_{L^2} / ||f||_{L^2}`.
//
// # Safety
// Handles must be live; `out_error` valid for writes.
enum AflStatus afl_reconstruction_error(const struct AflFrame *frame,
                                        const struct AflProfile *profile,
                                        const struct AflCoefficients *coefficients,
                                        double *out_error);

// # Safety
// `coefficients` must come from this library and not have been freed. NULL is ignored.
void afl_coefficients_free(struct AflCoefficients *coefficients);

// Decides an embedding or Bessel-potential query given as JSON. Writes the
// decision JSON (free with [`afl_string_free`]) and the verdict exit code
// (0 holds, 10 not implied, 11 out of scope).
//
// # Safety
// `query_json` must be NUL-terminated; out-pointers valid for writes.
enum AflStatus afl_check_json(const char *query_json, char **out_json, int32_t *out_code);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AFL_H */

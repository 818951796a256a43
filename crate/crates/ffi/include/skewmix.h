#ifndef SKEWMIX_H
#define SKEWMIX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible call.
typedef enum SkewmixStatus {
  SKEWMIX_STATUS_OK = 0,
  SKEWMIX_STATUS_NULL_POINTER = 1,
  SKEWMIX_STATUS_INVALID_UTF8 = 2,
  SKEWMIX_STATUS_INVALID_INPUT = 3,
  SKEWMIX_STATUS_NUMERICAL = 4,
  SKEWMIX_STATUS_SCAN_FAILED = 5,
  SKEWMIX_STATUS_BUDGET_EXCEEDED = 6,
  SKEWMIX_STATUS_BUFFER_TOO_SMALL = 7,
  SKEWMIX_STATUS_IO = 8,
  SKEWMIX_STATUS_PANIC = 9,
} SkewmixStatus;

// An experiment with lazily built numerical state.
typedef struct SkewmixExperiment SkewmixExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Create an experiment from a JSON configuration.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum SkewmixStatus skewmix_experiment_from_json(const char *json, struct SkewmixExperiment **out);

// Create an experiment from a built-in fixture (`r1`, `r2`, `r1-two-sided`,
// `r3` or `lattice`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum SkewmixStatus skewmix_experiment_from_fixture(const char *name,
                                                   struct SkewmixExperiment **out);

// Release an experiment. Passing null is allowed.
//
// # Safety
// `exp` must come from one of the constructors and not be used afterwards.
void skewmix_experiment_free(struct SkewmixExperiment *exp);

// Drift variance by the Green–Kubo sum and by the eigenvalue curvature.
//
// # Safety
// All pointers must be valid.
enum SkewmixStatus skewmix_drift_variance(const struct SkewmixExperiment *exp,
                                          double *omega_green_kubo,
                                          double *omega_eigen);

// Leading eigenvalue of the twisted operator at frequency `xi`.
//
// # Safety
// All pointers must be valid.
enum SkewmixStatus skewmix_leading_eigenvalue(const struct SkewmixExperiment *exp,
                                              double xi,
                                              double *re,
                                              double *im);

// `⟨r∘Fⁿ, s⟩` by the spectral method.
//
// # Safety
// All pointers must be valid.
enum SkewmixStatus skewmix_spectral_correlation(const struct SkewmixExperiment *exp,
                                                size_t n,
                                                double *re,
                                                double *im);

// `⟨r∘Fⁿ, s⟩` by exact enumeration of words.
//
// # Safety
// All pointers must be valid.
enum SkewmixStatus skewmix_oracle_correlation(const struct SkewmixExperiment *exp,
                                              size_t n,
                                              double *re,
                                              double *im);

// Expansion coefficients `c₁, c₃, …, c_{2k−1}` written as `re, im` pairs
// into `out`, which must hold `2k` doubles.
//
// # Safety
// `out` must point to `len` writable doubles.
enum SkewmixStatus skewmix_expansion_coefficients(const struct SkewmixExperiment *exp,
                                                  size_t k,
                                                  double *out,
                                                  size_t len);

// Library version as a static NUL-terminated string.
const char *skewmix_version(void);

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next call into the library on the same thread.
const char *skewmix_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKEWMIX_H */

#ifndef PWCHEAT_H
#define PWCHEAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PwStatus {
  PW_STATUS_OK = 0,
  PW_STATUS_NULL_POINTER = 1,
  PW_STATUS_INVALID_ARGUMENT = 2,
  PW_STATUS_VALIDATION = 3,
  PW_STATUS_DOMAIN = 4,
  PW_STATUS_CONFIG = 5,
  PW_STATUS_NUMERICAL = 6,
  PW_STATUS_IO = 7,
  PW_STATUS_PANIC = 8,
} PwStatus;

/**
 * Transfer-function samples `(lambda, H, sigma)`.
 */
typedef struct PwDataset PwDataset;

/**
 * Piecewise-constant conductivity on [0, 1].
 */
typedef struct PwProfile PwProfile;

/**
 * Outcome of a multi-start reconstruction.
 */
typedef struct PwReconstruction PwReconstruction;

/**
 * Options for [`pw_reconstruct`]; start from [`pw_reconstruct_options_default`].
 */
typedef struct PwReconstructOptions {
  double c0;
  double c1;
  size_t restarts;
  size_t max_iter;
  double tol_grad;
  double tol_step;
  double min_width;
  double damping_init;
  uint64_t seed;
  double ridge;
  double h_rel;
} PwReconstructOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pw_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a successful call.
 *
 * The pointer stays valid until the next `pw_*` call on the same thread.
 */
const char *pw_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from a `pw_*` function that documents ownership transfer and not be freed twice.
 */
void pw_string_free(char *s);

/**
 * Builds a profile from `n_values + 1` breakpoints and `n_values` values.
 *
 * # Safety
 * `breakpoints` and `values` must point to the stated number of doubles; `out` must be writable.
 */
enum PwStatus pw_profile_new(const double *breakpoints,
                             size_t n_breakpoints,
                             const double *values,
                             size_t n_values,
                             struct PwProfile **out);

/**
 * Parses a profile from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PwStatus pw_profile_from_json(const char *json, struct PwProfile **out);

/**
 * Serializes a profile to JSON. Free the string with [`pw_string_free`].
 *
 * # Safety
 * `profile` must be a live handle; `out` must be writable.
 */
enum PwStatus pw_profile_to_json(const struct PwProfile *profile, char **out);

/**
 * Number of pieces, or 0 for a NULL handle.
 *
 * # Safety
 * `profile` must be NULL or a live handle.
 */
size_t pw_profile_num_pieces(const struct PwProfile *profile);

/**
 * Copies the `num_pieces + 1` breakpoints into `out`.
 *
 * # Safety
 * `profile` must be a live handle; `out` must have room for `capacity` doubles.
 */
enum PwStatus pw_profile_breakpoints(const struct PwProfile *profile, double *out, size_t capacity);

/**
 * Copies the `num_pieces` conductivity values into `out`.
 *
 * # Safety
 * `profile` must be a live handle; `out` must have room for `capacity` doubles.
 */
enum PwStatus pw_profile_values(const struct PwProfile *profile, double *out, size_t capacity);

/**
 * Releases a profile. NULL is ignored.
 *
 * # Safety
 * `profile` must be NULL or a handle not yet freed.
 */
void pw_profile_free(struct PwProfile *profile);

/**
 * Transfer function `H(lambda)` of the profile.
 *
 * # Safety
 * `profile` must be a live handle; `out` must be writable.
 */
enum PwStatus pw_transfer_function(const struct PwProfile *profile, double lambda, double *out);

/**
 * `H` at each of `n` values of `lambda`, written to `out[0..n]`.
 *
 * # Safety
 * `lambdas` and `out` must each hold `n` doubles.
 */
enum PwStatus pw_transfer_function_many(const struct PwProfile *profile,
                                        const double *lambdas,
                                        size_t n,
                                        double *out);

/**
 * `ln psi(x)` for the potential `q^2 = 1/a` of the profile at spectral parameter `k`.
 *
 * The logarithm is returned because `psi` grows like `exp(k x)`.
 *
 * # Safety
 * `profile` must be a live handle; `out_ln` must be writable.
 */
enum PwStatus pw_psi_ln(const struct PwProfile *profile, double k, double x, double *out_ln);

/**
 * Dataset from `n` triples; samples are sorted by `lambda`.
 *
 * # Safety
 * `lambdas`, `h` and `sigma` must each hold `n` doubles; `out` must be writable.
 */
enum PwStatus pw_dataset_new(const double *lambdas,
                             const double *h,
                             const double *sigma,
                             size_t n,
                             struct PwDataset **out);

/**
 * Parses a dataset from CSV text with columns `lambda,H,sigma`.
 *
 * # Safety
 * `csv` must be a NUL-terminated string; `out` must be writable.
 */
enum PwStatus pw_dataset_from_csv(const char *csv, struct PwDataset **out);

/**
 * Synthetic samples of `H` on the `n` given `lambdas` with seeded relative noise.
 *
 * # Safety
 * `profile` must be a live handle; `lambdas` must hold `n` doubles; `out` must be writable.
 */
enum PwStatus pw_synthesize(const struct PwProfile *profile,
                            const double *lambdas,
                            size_t n,
                            double noise_rel,
                            uint64_t seed,
                            struct PwDataset **out);

/**
 * Number of samples, or 0 for a NULL handle.
 *
 * # Safety
 * `data` must be NULL or a live handle.
 */
size_t pw_dataset_len(const struct PwDataset *data);

/**
 * Copies the sample values `H` (ascending `lambda`) into `out`.
 *
 * # Safety
 * `data` must be a live handle; `out` must have room for `capacity` doubles.
 */
enum PwStatus pw_dataset_values(const struct PwDataset *data, double *out, size_t capacity);

/**
 * Releases a dataset. NULL is ignored.
 *
 * # Safety
 * `data` must be NULL or a handle not yet freed.
 */
void pw_dataset_free(struct PwDataset *data);

/**
 * Default reconstruction options.
 */
struct PwReconstructOptions pw_reconstruct_options_default(void);

/**
 * Fits an `n`-piece profile to `data`. `options` may be NULL for the defaults.
 *
 * A non-converged fit still returns `PW_STATUS_OK`; check [`pw_reconstruction_converged`].
 *
 * # Safety
 * `data` must be a live handle; `options` NULL or readable; `out` writable.
 */
enum PwStatus pw_reconstruct(const struct PwDataset *data,
                             size_t n,
                             const struct PwReconstructOptions *options,
                             struct PwReconstruction **out);

/**
 * Weighted residual sum of squares of the best fit; NaN for a NULL handle.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
double pw_reconstruction_objective(const struct PwReconstruction *r);

/**
 * # Safety
 * `r` must be NULL or a live handle.
 */
bool pw_reconstruction_converged(const struct PwReconstruction *r);

/**
 * # Safety
 * `r` must be NULL or a live handle.
 */
size_t pw_reconstruction_iterations(const struct PwReconstruction *r);

/**
 * Converged restarts that agree with the best fit.
 *
 * # Safety
 * `r` must be NULL or a live handle.
 */
size_t pw_reconstruction_restarts_agreeing(const struct PwReconstruction *r);

/**
 * # Safety
 * `r` must be NULL or a live handle.
 */
size_t pw_reconstruction_restarts_converged(const struct PwReconstruction *r);

/**
 * # Safety
 * `r` must be NULL or a live handle.
 */
double pw_reconstruction_jacobian_condition(const struct PwReconstruction *r);

/**
 * Copy of the fitted profile as a new handle owned by the caller.
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum PwStatus pw_reconstruction_profile(const struct PwReconstruction *r, struct PwProfile **out);

/**
 * Full result as JSON. Free the string with [`pw_string_free`].
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum PwStatus pw_reconstruction_to_json(const struct PwReconstruction *r, char **out);

/**
 * Releases a reconstruction. NULL is ignored.
 *
 * # Safety
 * `r` must be NULL or a handle not yet freed.
 */
void pw_reconstruction_free(struct PwReconstruction *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PWCHEAT_H */

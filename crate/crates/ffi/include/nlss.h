#ifndef NLSS_H
#define NLSS_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call.
 */
typedef enum NlssStatus {
  NLSS_STATUS_OK = 0,
  NLSS_STATUS_NULL_POINTER = 1,
  NLSS_STATUS_INVALID_ARGUMENT = 2,
  NLSS_STATUS_CONFIG = 3,
  NLSS_STATUS_NUMERICAL = 4,
  NLSS_STATUS_IO = 5,
  NLSS_STATUS_PANIC = 6,
} NlssStatus;

/**
 * Parsed run configuration.
 */
typedef struct NlssConfig NlssConfig;

/**
 * Orthonormal fields with occupations.
 */
typedef struct NlssEnsemble NlssEnsemble;

/**
 * Sampled observables of one evolution.
 */
typedef struct NlssSeries NlssSeries;

/**
 * One row of a time series; absent observers are NaN.
 */
typedef struct NlssSample {
  double t;
  double mass;
  double energy;
  double h1_lambda_sq;
  double gram_dev;
  double energy_casimir;
  double rho_dist;
} NlssSample;

/**
 * Summary of a stability experiment.
 */
typedef struct NlssStability {
  double rhs;
  double min_margin;
  size_t rows;
  bool violated;
  /**
   * 1 holds, 0 fails, -1 not applicable (cubic).
   */
  int32_t quintic_holds;
  bool aborted;
} NlssStability;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *nlss_last_error(void);

/**
 * Library version as a static string.
 */
const char *nlss_version(void);

/**
 * Parses a TOML configuration held in a string.
 *
 * # Safety
 * `toml` must be a valid C string and `config` a valid pointer.
 */
enum NlssStatus nlss_config_parse(const char *toml, struct NlssConfig **config);

/**
 * Reads and parses a TOML configuration file.
 *
 * # Safety
 * `path` must be a valid C string and `config` a valid pointer.
 */
enum NlssStatus nlss_config_load(const char *path, struct NlssConfig **config);

/**
 * # Safety
 * `config` must come from this library or be null.
 */
void nlss_config_free(struct NlssConfig *config);

/**
 * Random orthonormal ensemble of `count` fields on `[-n, n]^3`, band
 * limited at the dyadic scale `band`.
 *
 * # Safety
 * `occupations` must point to `count` values, `theta` to three values.
 */
enum NlssStatus nlss_random_ensemble(size_t n,
                                     const double *occupations,
                                     size_t count,
                                     uint64_t band,
                                     const double *theta,
                                     uint64_t seed,
                                     struct NlssEnsemble **ensemble);

/**
 * Stationary state of the configuration, with its chemical shift and
 * dual value.
 *
 * # Safety
 * Pointers must be valid; `sigma` and `phi` may be null.
 */
enum NlssStatus nlss_stationary_solve(const struct NlssConfig *config,
                                      struct NlssEnsemble **ensemble,
                                      double *sigma,
                                      double *phi);

/**
 * Adds band-limited noise and restores orthonormality.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_perturb(const struct NlssEnsemble *ensemble,
                             double amplitude,
                             uint64_t band,
                             uint64_t seed,
                             struct NlssEnsemble **perturbed);

/**
 * Number of fields.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_ensemble_len(const struct NlssEnsemble *ensemble, size_t *len);

/**
 * `sum_j lambda_j ||u_j||^2`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_ensemble_mass(const struct NlssEnsemble *ensemble, double *value);

/**
 * Energy with `alpha` in {1, 2} and `sign` in {+1, -1}.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_ensemble_energy(const struct NlssEnsemble *ensemble,
                                     uint8_t alpha,
                                     int8_t sign,
                                     double *value);

/**
 * `max |Gram - I|`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_ensemble_gram_deviation(const struct NlssEnsemble *ensemble, double *value);

/**
 * # Safety
 * `ensemble` must come from this library or be null.
 */
void nlss_ensemble_free(struct NlssEnsemble *ensemble);

/**
 * Evolves `initial` with the configuration's evolution settings. An
 * aborted run still returns `NLSS_STATUS_OK`; see [`nlss_series_aborted`].
 *
 * # Safety
 * Pointers must be valid; `last` may be null.
 */
enum NlssStatus nlss_evolve(const struct NlssConfig *config,
                            const struct NlssEnsemble *initial,
                            struct NlssEnsemble **last,
                            struct NlssSeries **series);

/**
 * Number of samples.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_series_len(const struct NlssSeries *series, size_t *len);

/**
 * Sample `index`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_series_get(const struct NlssSeries *series,
                                size_t index,
                                struct NlssSample *sample);

/**
 * Whether the blow-up guard fired, and at which step.
 *
 * # Safety
 * Pointers must be valid; `step` may be null.
 */
enum NlssStatus nlss_series_aborted(const struct NlssSeries *series, bool *aborted, size_t *step);

/**
 * Writes the series as CSV, atomically.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_series_write_csv(const struct NlssSeries *series, const char *path);

/**
 * # Safety
 * `series` must come from this library or be null.
 */
void nlss_series_free(struct NlssSeries *series);

/**
 * Runs the stability experiment of the configuration.
 *
 * # Safety
 * Pointers must be valid.
 */
enum NlssStatus nlss_stability_run(const struct NlssConfig *config, struct NlssStability *summary);

/**
 * Runs the validation suite; `report` receives its JSON, to be released
 * with [`nlss_string_free`].
 *
 * # Safety
 * Pointers must be valid; `report` may be null.
 */
enum NlssStatus nlss_validate_run(const struct NlssConfig *config, bool *passed, char **report);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void nlss_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLSS_H */

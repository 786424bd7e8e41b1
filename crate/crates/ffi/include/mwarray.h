#ifndef MWARRAY_H
#define MWARRAY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. `CONFIG_ERROR` and `NUMERICAL_ERROR` match the CLI exit codes.
 */
typedef enum MwStatus {
  MW_STATUS_OK = 0,
  MW_STATUS_CONFIG_ERROR = 2,
  MW_STATUS_NUMERICAL_ERROR = 3,
  MW_STATUS_NULL_POINTER = 10,
  MW_STATUS_INVALID_ARGUMENT = 11,
  MW_STATUS_PANIC = 12,
} MwStatus;

/**
 * Opaque array of interferometers.
 */
typedef struct MwArray MwArray;

/**
 * Opaque histogram of a simulated variable.
 */
typedef struct MwHistogram MwHistogram;

/**
 * Opaque noise model.
 */
typedef struct MwNoise MwNoise;

/**
 * Interferometer parameters in units with ħ = 1.
 */
typedef struct MwDevice {
  double mass;
  double omega;
  double alpha_r;
  double alpha_i;
} MwDevice;

typedef struct MwScales {
  double x0;
  double p0;
} MwScales;

/**
 * Density `∝ exp(−(x−center)²/2width²) (offset + cos(wavenumber (x−center)))`.
 */
typedef struct MwPattern {
  double offset;
  double width;
  double wavenumber;
  double center;
} MwPattern;

typedef struct MwFringeFit {
  double visibility;
  double wavenumber;
  double width;
  double center;
  double residual_norm;
} MwFringeFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the calling thread's last error message, excluding the
 * terminating NUL; 0 when there is none.
 */
size_t mw_last_error_length(void);

/**
 * Copy the last error message, NUL-terminated and truncated to `capacity`.
 * Returns the full message length, so a return value `>= capacity` means
 * the copy was truncated.
 *
 * # Safety
 * `buffer` must be NULL or valid for `capacity` bytes.
 */
size_t mw_last_error_message(char *buffer, size_t capacity);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mw_version(void);

/**
 * # Safety
 * `device` and `out` must be valid pointers.
 */
enum MwStatus mw_overlap_time(const struct MwDevice *device, double *out);

/**
 * # Safety
 * `device` and `out` must be valid pointers.
 */
enum MwStatus mw_derive_scales(const struct MwDevice *device, struct MwScales *out);

/**
 * Device whose pattern at the overlap time has wavenumber `k` and envelope
 * width `sigma`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwStatus mw_device_for_pattern(double mass,
                                    double omega,
                                    double k,
                                    double sigma,
                                    struct MwDevice *out);

/**
 * A device of another mass with the same overlap time and wavenumber.
 *
 * # Safety
 * `device` and `out` must be valid pointers.
 */
enum MwStatus mw_device_matched(const struct MwDevice *device, double mass, struct MwDevice *out);

/**
 * # Safety
 * `device` and `out` must be valid pointers.
 */
enum MwStatus mw_pattern_at_overlap(const struct MwDevice *device, struct MwPattern *out);

/**
 * Array of `count` devices at sites `0, spacing, 2·spacing, …`.
 *
 * # Safety
 * `devices` must point to `count` devices; `out` must be a valid pointer.
 */
enum MwStatus mw_array_new(const struct MwDevice *devices,
                           size_t count,
                           double spacing,
                           struct MwArray **out);

/**
 * # Safety
 * `array` must be NULL or a handle from [`mw_array_new`] not yet freed.
 */
void mw_array_free(struct MwArray *array);

/**
 * Order-`q` pattern from the pairwise recursion.
 *
 * # Safety
 * `array` must be a live handle; `out` a valid pointer.
 */
enum MwStatus mw_recursive_pattern(const struct MwArray *array,
                                   size_t q,
                                   double eta_tolerance,
                                   struct MwPattern *out);

/**
 * Noise model from JSON, e.g.
 * `{"orders":[{"kind":"ornstein_uhlenbeck","relaxation_time":0.5,"std":0.4}]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum MwStatus mw_noise_from_json(const char *json, struct MwNoise **out);

/**
 * Per-shot Gaussian common-mode displacement with standard deviation
 * `sigma_gamma` at time `t`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwStatus mw_noise_common_mode(double sigma_gamma, double t, struct MwNoise **out);

/**
 * # Safety
 * `noise` must be NULL or a live handle.
 */
void mw_noise_free(struct MwNoise *noise);

/**
 * Simulate `shots` repetitions and histogram `x_{0,q}`. `noise` may be NULL
 * for noiseless runs.
 *
 * # Safety
 * `array` must be a live handle, `noise` NULL or a live handle, `out` valid.
 */
enum MwStatus mw_run_experiment(const struct MwArray *array,
                                const struct MwNoise *noise,
                                uint64_t shots,
                                size_t q,
                                uint64_t seed,
                                struct MwHistogram **out);

/**
 * # Safety
 * `histogram` must be NULL or a live handle.
 */
void mw_histogram_free(struct MwHistogram *histogram);

/**
 * Number of bins; 0 for NULL.
 *
 * # Safety
 * `histogram` must be NULL or a live handle.
 */
size_t mw_histogram_bins(const struct MwHistogram *histogram);

/**
 * Total samples, including those outside the binned range.
 *
 * # Safety
 * `histogram` must be NULL or a live handle.
 */
uint64_t mw_histogram_total(const struct MwHistogram *histogram);

/**
 * Copy bin centers and normalized densities into caller buffers of length
 * `len`, which must equal [`mw_histogram_bins`].
 *
 * # Safety
 * `centers` and `density` must be valid for `len` doubles.
 */
enum MwStatus mw_histogram_copy(const struct MwHistogram *histogram,
                                double *centers,
                                double *density,
                                size_t len);

/**
 * Least-squares fringe fit starting from wavenumber `k_hint`.
 *
 * # Safety
 * `histogram` must be a live handle; `out` a valid pointer.
 */
enum MwStatus mw_fit_fringe(const struct MwHistogram *histogram,
                            double k_hint,
                            struct MwFringeFit *out);

/**
 * Distance (m) at which a point mass (kg) produces an order-`q` finite
 * difference of `delta_a` (m/s²) across sites spaced `h` (m).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwStatus mw_standoff_distance(double mass, double h, size_t q, double delta_a, double *out);

/**
 * Logarithmic negativity of `copies` ∈ {1, 2, 4} devices after averaging
 * over a uniform common phase and, when `uniform_gradient` is non-zero, a
 * uniform phase gradient (otherwise a zero gradient).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwStatus mw_recovered_entanglement(size_t copies, bool uniform_gradient, double *out);

/**
 * Entanglement certified by local measurement on the same states as
 * [`mw_recovered_entanglement`].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MwStatus mw_measured_recovery(size_t copies, bool uniform_gradient, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MWARRAY_H */

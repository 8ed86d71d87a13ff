#ifndef IPVSS_H
#define IPVSS_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum IpvssStatus {
  IPVSS_STATUS_OK = 0,
  IPVSS_STATUS_NULL_POINTER = 1,
  IPVSS_STATUS_INVALID_CONFIG = 2,
  IPVSS_STATUS_DIMENSION_MISMATCH = 3,
  IPVSS_STATUS_INDEX_OUT_OF_RANGE = 4,
  IPVSS_STATUS_DIVERGENCE = 5,
  IPVSS_STATUS_STABILITY_VIOLATION = 6,
  IPVSS_STATUS_IO = 7,
  IPVSS_STATUS_PANIC = 8,
} IpvssStatus;

typedef enum IpvssScheduleKind {
  /**
   * Constant step `mu0`.
   */
  IPVSS_SCHEDULE_KIND_INVARIANT = 0,
  /**
   * `max(mu0 / n, phi)`.
   */
  IPVSS_SCHEDULE_KIND_ITERATION_PROMOTING = 1,
  /**
   * `mu0 * pᵀp / (pᵀp + c)` with smoothing `eta`.
   */
  IPVSS_SCHEDULE_KIND_ERROR_DRIVEN = 2,
} IpvssScheduleKind;

typedef enum IpvssAlgorithm {
  IPVSS_ALGORITHM_ISS_LMS = 0,
  IPVSS_ALGORITHM_VSS_LMS = 1,
  IPVSS_ALGORITHM_IPVSS_LMS = 2,
} IpvssAlgorithm;

/**
 * Opaque Monte Carlo result handle.
 */
typedef struct IpvssExperiment IpvssExperiment;

/**
 * Opaque adaptive filter handle.
 */
typedef struct IpvssFilter IpvssFilter;

/**
 * Flat schedule description. Fields a kind does not use are ignored.
 */
typedef struct IpvssSchedule {
  enum IpvssScheduleKind kind;
  double mu0;
  double phi;
  double eta;
  double c;
} IpvssSchedule;

typedef struct IpvssTrialConfig {
  size_t n_taps;
  /**
   * Use `INFINITY` for a noiseless run.
   */
  double snr_db;
  size_t iterations;
  size_t num_trials;
  uint64_t master_seed;
  double tail_fraction;
} IpvssTrialConfig;

typedef struct IpvssTrajectoryStats {
  double steady_state;
  double steady_state_db;
  double steady_state_std_error;
  size_t convergence_iteration;
  double convergence_std_error;
  size_t completed_trials;
  size_t divergent_trials;
} IpvssTrajectoryStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or NULL. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ipvss_last_error_message(void);

/**
 * Creates a zero-initialized filter of `n_taps` taps.
 *
 * # Safety
 * `schedule` must point to a valid `IpvssSchedule`; `out` must be writable.
 */
enum IpvssStatus ipvss_filter_new(size_t n_taps,
                                  const struct IpvssSchedule *schedule,
                                  struct IpvssFilter **out);

/**
 * # Safety
 * `filter` must be NULL or a handle from `ipvss_filter_new` not yet freed.
 */
void ipvss_filter_free(struct IpvssFilter *filter);

/**
 * Applies one update with regressor `x[0..len]` and observation `y`.
 * Writes the a-priori error to `out_error` when it is non-NULL. On
 * divergence the filter is left unchanged.
 *
 * # Safety
 * `filter` must be a live handle; `x` must point to `len` readable doubles.
 */
enum IpvssStatus ipvss_filter_update(struct IpvssFilter *filter,
                                     const double *x,
                                     size_t len,
                                     double y,
                                     double *out_error);

/**
 * Copies the current taps into `out[0..len]`; `len` must equal the filter length.
 *
 * # Safety
 * `filter` must be a live handle; `out` must point to `len` writable doubles.
 */
enum IpvssStatus ipvss_filter_taps(const struct IpvssFilter *filter, double *out, size_t len);

/**
 * Current 1-based iteration counter, or 0 for a NULL handle.
 *
 * # Safety
 * `filter` must be NULL or a live handle.
 */
uint64_t ipvss_filter_iteration(const struct IpvssFilter *filter);

/**
 * Step size the schedule gives at the current state.
 *
 * # Safety
 * `filter` must be a live handle; `out` must be writable.
 */
enum IpvssStatus ipvss_filter_step_size(const struct IpvssFilter *filter, double *out);

/**
 * Multiplications and additions per iteration.
 *
 * # Safety
 * `out_multiplications` and `out_additions` must be writable.
 */
enum IpvssStatus ipvss_op_count(enum IpvssAlgorithm algorithm,
                                size_t n_taps,
                                uint64_t *out_multiplications,
                                uint64_t *out_additions);

/**
 * `lambda_max * noise_variance / (2 - 3 * step * noise_variance)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum IpvssStatus ipvss_steady_state_lower_bound(double lambda_max,
                                                double noise_variance,
                                                double step,
                                                double *out);

/**
 * Runs a Monte Carlo experiment over `schedules[0..n_schedules]`, named
 * `algo0`, `algo1`, ... in order.
 *
 * # Safety
 * `config` must be valid, `schedules` must point to `n_schedules` entries
 * and `out` must be writable.
 */
enum IpvssStatus ipvss_experiment_run(const struct IpvssTrialConfig *config,
                                      const struct IpvssSchedule *schedules,
                                      size_t n_schedules,
                                      struct IpvssExperiment **out);

/**
 * # Safety
 * `experiment` must be NULL or a handle from `ipvss_experiment_run` not yet freed.
 */
void ipvss_experiment_free(struct IpvssExperiment *experiment);

/**
 * Number of algorithms in the result (0 for NULL).
 *
 * # Safety
 * `experiment` must be NULL or a live handle.
 */
size_t ipvss_experiment_len(const struct IpvssExperiment *experiment);

/**
 * Whether more than 1% of trials diverged for some algorithm.
 *
 * # Safety
 * `experiment` must be NULL or a live handle.
 */
bool ipvss_experiment_unstable(const struct IpvssExperiment *experiment);

/**
 * Copies the averaged learning curve of algorithm `index` into `out[0..len]`;
 * `len` must equal the configured iteration count.
 *
 * # Safety
 * `experiment` must be a live handle; `out` must point to `len` writable doubles.
 */
enum IpvssStatus ipvss_experiment_curve(const struct IpvssExperiment *experiment,
                                        size_t index,
                                        double *out,
                                        size_t len);

/**
 * # Safety
 * `experiment` must be a live handle; `out` must be writable.
 */
enum IpvssStatus ipvss_experiment_stats(const struct IpvssExperiment *experiment,
                                        size_t index,
                                        struct IpvssTrajectoryStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPVSS_H */

/* C interface of the dqcalib hand-eye calibration library. */

#ifndef DQCALIB_H
#define DQCALIB_H

/* Generated by cbindgen from the dqcalib-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by fallible functions.
 */
typedef enum DqcStatus {
  /**
   * Success.
   */
  DQC_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DQC_STATUS_NULL_POINTER = 1,
  /**
   * An argument or option value is out of range.
   */
  DQC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A file could not be read or written.
   */
  DQC_STATUS_IO = 3,
  /**
   * Input data is malformed or insufficient (parse, timestamps,
   * association, too few pairs).
   */
  DQC_STATUS_DATA = 4,
  /**
   * The solver declared failure (no convergence, degenerate geometry,
   * ambiguous null space, infeasible recovery).
   */
  DQC_STATUS_SOLVER = 5,
  /**
   * An internal invariant was violated.
   */
  DQC_STATUS_INTERNAL = 6,
} DqcStatus;

/**
 * Solver selection.
 */
typedef enum DqcSolver {
  /**
   * Local SQP with a posteriori globality certification.
   */
  DQC_SOLVER_FAST = 0,
  /**
   * Lagrangian-dual interior point, globally optimal by construction.
   */
  DQC_SOLVER_GLOBAL = 1,
} DqcSolver;

/**
 * Which sensor reports translations up to an unknown scale.
 */
typedef enum DqcScaledSensor {
  DQC_SCALED_SENSOR_SENSOR_A = 0,
  DQC_SCALED_SENSOR_SENSOR_B = 1,
} DqcScaledSensor;

/**
 * Dataset handle: accumulated relative-motion pairs (opaque).
 */
typedef struct DqcDataset DqcDataset;

/**
 * Solution handle (opaque).
 */
typedef struct DqcSolution DqcSolution;

/**
 * Solve and pairing options. Obtain defaults from `dqc_options_default`
 * and override selectively.
 */
typedef struct DqcOptions {
  enum DqcSolver solver;
  enum DqcScaledSensor scaled_sensor;
  /**
   * Parallelism constraints per scale group: 3 (reduced) or 6 (full).
   */
  uint32_t constraints;
  /**
   * Frame distance between the poses of one relative motion (files).
   */
  uint32_t stride;
  /**
   * Association window in seconds; <= 0 selects half the median
   * sensor-b frame interval (files).
   */
  double max_dt;
  /**
   * Interpolate sensor-b poses at sensor-a timestamps (files).
   */
  bool interpolate;
  /**
   * Drop motion pairs rotating less than this angle in radians;
   * <= 0 keeps all pairs (files).
   */
  double min_rotation;
} DqcOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *dqc_version(void);

/**
 * Message of the most recent error on this thread. Valid until the next
 * failing call on the same thread; never null.
 */
const char *dqc_last_error_message(void);

/**
 * Fills `options` with the defaults (fast solver, sensor b scaled,
 * 3 constraints, stride 1, automatic association window, interpolation on,
 * no rotation filter).
 */
enum DqcStatus dqc_options_default(struct DqcOptions *options);

/**
 * Creates an empty dataset. Free with `dqc_dataset_free`.
 */
struct DqcDataset *dqc_dataset_new(void);

/**
 * Frees a dataset; a null pointer is ignored.
 */
void dqc_dataset_free(struct DqcDataset *dataset);

/**
 * Appends one relative-motion pair. Each motion is 8 doubles: the real
 * quaternion (w, x, y, z) then the dual quaternion (w, x, y, z). The
 * sensor-b motion is the measured (possibly scaled) one. `scale_index`
 * selects the scale group (0 for single-scale problems).
 */
enum DqcStatus dqc_dataset_add_pair(struct DqcDataset *dataset,
                                    const double *motion_a,
                                    const double *motion_b,
                                    uint32_t scale_index);

/**
 * Loads one sequence (two trajectory files in the documented format),
 * associates the poses per `options`, and appends the relative-motion
 * pairs under `scale_index`.
 */
enum DqcStatus dqc_dataset_load_files(struct DqcDataset *dataset,
                                      const char *path_a,
                                      const char *path_b,
                                      const struct DqcOptions *options,
                                      uint32_t scale_index);

/**
 * Number of motion pairs currently in the dataset (0 for null).
 */
size_t dqc_dataset_pair_count(const struct DqcDataset *dataset);

/**
 * Solves the dataset's calibration problem. On success, `*solution`
 * receives a handle to free with `dqc_solution_free`.
 */
enum DqcStatus dqc_solve(const struct DqcDataset *dataset,
                         const struct DqcOptions *options,
                         struct DqcSolution **solution);

/**
 * Frees a solution; a null pointer is ignored.
 */
void dqc_solution_free(struct DqcSolution *solution);

/**
 * Hand-eye rotation as a unit quaternion (w, x, y, z), canonical sign.
 */
enum DqcStatus dqc_solution_rotation(const struct DqcSolution *solution, double *out);

/**
 * Hand-eye translation in meters (x, y, z).
 */
enum DqcStatus dqc_solution_translation(const struct DqcSolution *solution, double *out);

/**
 * Number of estimated scale factors (one per scale group).
 */
size_t dqc_solution_alpha_count(const struct DqcSolution *solution);

/**
 * Copies up to `capacity` scale factors into `out`.
 */
enum DqcStatus dqc_solution_alphas(const struct DqcSolution *solution,
                                   double *out,
                                   size_t capacity);

/**
 * Objective value at the solution (NaN for null).
 */
double dqc_solution_cost(const struct DqcSolution *solution);

/**
 * Duality gap when one was computed, NaN otherwise.
 */
double dqc_solution_gap(const struct DqcSolution *solution);

/**
 * 1 when the solution is certified globally optimal, 0 when it is not,
 * -1 for null.
 */
int32_t dqc_solution_certified(const struct DqcSolution *solution);

/**
 * Full result document as JSON (schema dqcalib/1). Free the returned
 * string with `dqc_string_free`; returns null for a null solution.
 */
char *dqc_solution_json(const struct DqcSolution *solution);

/**
 * Frees a string returned by this library; a null pointer is ignored.
 */
void dqc_string_free(char *string);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DQCALIB_H */

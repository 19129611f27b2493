#ifndef CRS_SIM_H
#define CRS_SIM_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of an API call.
 */
typedef enum CrsStatus {
  CRS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CRS_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8, or an index was out of range.
   */
  CRS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Configuration or input failed validation.
   */
  CRS_STATUS_VALIDATION = 3,
  /**
   * Reading or writing a file failed.
   */
  CRS_STATUS_IO = 4,
  /**
   * The simulation failed while running.
   */
  CRS_STATUS_RUNTIME = 5,
  /**
   * An internal panic was caught.
   */
  CRS_STATUS_PANIC = 6,
} CrsStatus;

/**
 * Chemistry: species registry plus catalyzed reactions.
 */
typedef struct CrsChemistry CrsChemistry;

/**
 * Validated run configuration.
 */
typedef struct CrsConfig CrsConfig;

/**
 * Completed simulation run.
 */
typedef struct CrsTrajectory CrsTrajectory;

/**
 * One point of the observation grid.
 */
typedef struct CrsObservation {
  double t;
  uint64_t total_mass;
  size_t richness;
  size_t max_len;
} CrsObservation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * successful call. Valid until the next API call on the same thread.
 */
const char *crs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *crs_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void crs_string_free(char *s);

/**
 * Generates a chemistry over the binary alphabet with default product
 * length cap.
 *
 * # Safety
 * `out` must point to writable storage for a handle.
 */
enum CrsStatus crs_chemistry_generate(double p,
                                      uint64_t chem_seed,
                                      size_t initial_max_len,
                                      struct CrsChemistry **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
enum CrsStatus crs_chemistry_load(const char *path, struct CrsChemistry **out);

/**
 * # Safety
 * `chem` must be a live handle; `path` a NUL-terminated string.
 */
enum CrsStatus crs_chemistry_save(const struct CrsChemistry *chem, const char *path);

/**
 * Canonical JSON form; free with [`crs_string_free`].
 *
 * # Safety
 * `chem` must be a live handle; `out` writable.
 */
enum CrsStatus crs_chemistry_to_json(const struct CrsChemistry *chem, char **out);

/**
 * Number of registered species.
 *
 * # Safety
 * `chem` must be a live handle; `out` writable.
 */
enum CrsStatus crs_chemistry_species_count(const struct CrsChemistry *chem, size_t *out);

/**
 * # Safety
 * `chem` must be a live handle; `out` writable.
 */
enum CrsStatus crs_chemistry_catalysis_count(const struct CrsChemistry *chem, size_t *out);

/**
 * # Safety
 * `chem` must be null or a handle not yet freed.
 */
void crs_chemistry_free(struct CrsChemistry *chem);

/**
 * Reference-scenario configuration.
 *
 * # Safety
 * `out` must be writable.
 */
enum CrsStatus crs_config_default(struct CrsConfig **out);

/**
 * Parses and validates a JSON config. A relative `chemistry_path` resolves
 * against the working directory.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum CrsStatus crs_config_from_json(const char *json, struct CrsConfig **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
enum CrsStatus crs_config_load(const char *path, struct CrsConfig **out);

/**
 * Canonical JSON echo; free with [`crs_string_free`].
 *
 * # Safety
 * `config` must be a live handle; `out` writable.
 */
enum CrsStatus crs_config_to_json(const struct CrsConfig *config, char **out);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void crs_config_free(struct CrsConfig *config);

/**
 * Runs one simulation. `chem` may be null to use the configuration's own
 * chemistry. `compare_arm` selects `compare_reactor` instead of `reactor`.
 *
 * # Safety
 * `config` must be a live handle, `chem` null or a live handle, `out`
 * writable.
 */
enum CrsStatus crs_simulate(const struct CrsConfig *config,
                            const struct CrsChemistry *chem,
                            uint64_t seed,
                            bool compare_arm,
                            struct CrsTrajectory **out);

/**
 * Number of observations.
 *
 * # Safety
 * `tr` must be a live handle; `out` writable.
 */
enum CrsStatus crs_trajectory_len(const struct CrsTrajectory *tr, size_t *out);

/**
 * # Safety
 * `tr` must be a live handle; `out` writable.
 */
enum CrsStatus crs_trajectory_observation(const struct CrsTrajectory *tr,
                                          size_t index,
                                          struct CrsObservation *out);

/**
 * Total number of events fired.
 *
 * # Safety
 * `tr` must be a live handle; `out` writable.
 */
enum CrsStatus crs_trajectory_event_count(const struct CrsTrajectory *tr, uint64_t *out);

/**
 * Trajectory CSV (`t,total_mass,richness,max_len`); free with
 * [`crs_string_free`].
 *
 * # Safety
 * `tr` must be a live handle; `out` writable.
 */
enum CrsStatus crs_trajectory_to_csv(const struct CrsTrajectory *tr, char **out);

/**
 * Run summary as JSON; free with [`crs_string_free`].
 *
 * # Safety
 * `tr` must be a live handle; `out` writable.
 */
enum CrsStatus crs_trajectory_summary_json(const struct CrsTrajectory *tr, char **out);

/**
 * # Safety
 * `tr` must be null or a handle not yet freed.
 */
void crs_trajectory_free(struct CrsTrajectory *tr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRS_SIM_H */

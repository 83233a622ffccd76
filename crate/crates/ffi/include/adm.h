#ifndef ADM_H
#define ADM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; values match the command-line exit codes where they overlap.
 */
typedef enum AdmStatus {
  ADM_STATUS_OK = 0,
  ADM_STATUS_ASSERTION_FAILED = 1,
  ADM_STATUS_CONFIG_ERROR = 2,
  ADM_STATUS_NUMERICAL_FAILURE = 3,
  ADM_STATUS_INVALID_ARGUMENT = 4,
  ADM_STATUS_NULL_POINTER = 5,
  ADM_STATUS_IO_ERROR = 6,
  ADM_STATUS_PANIC = 7,
} AdmStatus;

/**
 * Periodic grid handle.
 */
typedef struct AdmGrid AdmGrid;

/**
 * A model, its current state and time.
 */
typedef struct AdmSimulation AdmSimulation;

/**
 * Scalar diagnostics of the current state.
 */
typedef struct AdmDiagnostics {
  double t;
  double y;
  double z;
  double big_y;
  double big_z;
  double chi_value;
  double dn_state_norm;
} AdmDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *adm_last_error_message(void);

/**
 * Static, NUL-terminated version string.
 */
const char *adm_version(void);

/**
 * Creates an `m × m` grid of side `side_length`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum AdmStatus adm_grid_new(double side_length, size_t modes, struct AdmGrid **out);

/**
 * # Safety
 * `grid` must come from [`adm_grid_new`] and not be used afterwards.
 */
void adm_grid_free(struct AdmGrid *grid);

/**
 * `λ₁ = (2π/L)²`; NaN for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
double adm_grid_lambda1(const struct AdmGrid *grid);

/**
 * Writes the distinct retained eigenvalues in increasing order into
 * `out` (at most `len`); returns how many exist.
 *
 * # Safety
 * `grid` must be a live handle and `out` must hold `len` doubles.
 */
size_t adm_grid_eigenvalues(const struct AdmGrid *grid, double *out, size_t len);

/**
 * Builds a simulation from configuration text in the command-line format.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` writable.
 */
enum AdmStatus adm_simulation_from_config(const char *config, struct AdmSimulation **out);

/**
 * # Safety
 * `sim` must come from [`adm_simulation_from_config`] and not be used afterwards.
 */
void adm_simulation_free(struct AdmSimulation *sim);

/**
 * Advances `steps` time steps. On failure the state is left at the last
 * successful step.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum AdmStatus adm_simulation_step(struct AdmSimulation *sim, size_t steps);

/**
 * Current time; NaN for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
double adm_simulation_time(const struct AdmSimulation *sim);

/**
 * # Safety
 * `sim` must be a live handle and `out` writable.
 */
enum AdmStatus adm_simulation_diagnostics(const struct AdmSimulation *sim,
                                          struct AdmDiagnostics *out);

/**
 * Copies grid samples of field `which` (0: v₁, 1: v₂, 2: ϑ), row-major
 * with `x₁` slow, into `out`, which must hold exactly `M²` doubles.
 *
 * # Safety
 * `sim` must be a live handle and `out` must hold `len` doubles.
 */
enum AdmStatus adm_simulation_samples(const struct AdmSimulation *sim,
                                      int which,
                                      double *out,
                                      size_t len);

/**
 * Runs a full experiment (`simulate`, `gap`, `squeeze` or `verify-ops`)
 * writing artifacts into `out_dir`. Returns the command-line exit code.
 *
 * # Safety
 * All arguments must be NUL-terminated strings.
 */
int adm_run_experiment(const char *config, const char *experiment, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADM_H */

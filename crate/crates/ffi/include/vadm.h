#ifndef VADM_H
#define VADM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdmStatus {
  ADM_STATUS_OK = 0,
  ADM_STATUS_NULL_POINTER = 1,
  ADM_STATUS_INVALID_ARGUMENT = 2,
  ADM_STATUS_INVALID_CONFIG = 3,
  ADM_STATUS_CFL_VIOLATION = 4,
  ADM_STATUS_NON_FINITE = 5,
  ADM_STATUS_IO = 6,
  ADM_STATUS_CHECKPOINT = 7,
  ADM_STATUS_PANIC = 8,
} AdmStatus;

/**
 * Opaque solver handle.
 */
typedef struct AdmSolver AdmSolver;

/**
 * Energy terms at the current state. `budget_residual` is NaN until the
 * solver has taken a step.
 */
typedef struct AdmEnergyRecord {
  double t;
  uint64_t step;
  double model_energy;
  double dissipation;
  double forcing_power;
  double budget_residual;
  double gronwall_integrand;
  double l2_norm;
  double theta_seminorm;
} AdmEnergyRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *adm_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *adm_version(void);

/**
 * Creates a solver from TOML configuration text (same format as the CLI).
 *
 * # Safety
 * `config_toml` must be a nul-terminated string and `out` a valid pointer.
 */
enum AdmStatus adm_solver_new(const char *config_toml, struct AdmSolver **out);

/**
 * Releases a solver; null is ignored.
 *
 * # Safety
 * `solver` must come from [`adm_solver_new`] and not be used afterwards.
 */
void adm_solver_free(struct AdmSolver *solver);

/**
 * Advances `steps` time steps. On a CFL or non-finite abort the state stays
 * at the last good step.
 *
 * # Safety
 * `solver` must be a live handle.
 */
enum AdmStatus adm_solver_step(struct AdmSolver *solver, uint64_t steps);

/**
 * # Safety
 * `solver` must be a live handle and `t` a valid pointer.
 */
enum AdmStatus adm_solver_time(const struct AdmSolver *solver, double *t);

/**
 * # Safety
 * `solver` must be a live handle and `out` a valid pointer.
 */
enum AdmStatus adm_solver_energy(const struct AdmSolver *solver, struct AdmEnergyRecord *out);

/**
 * Writes the current state in the versioned checkpoint format.
 *
 * # Safety
 * `solver` must be a live handle and `path` a nul-terminated string.
 */
enum AdmStatus adm_solver_write_checkpoint(const struct AdmSolver *solver, const char *path);

/**
 * Filter symbol `1 + (alpha |k3|)^(2 theta)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum AdmStatus adm_filter_symbol(double alpha, double theta, double k3, double *out);

/**
 * Deconvolution symbol of order `order`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum AdmStatus adm_deconv_symbol(double alpha,
                                 double theta,
                                 uint32_t order,
                                 double k3,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VADM_H */

#ifndef VCNLS_H
#define VCNLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum VcnlsStatus {
  VCNLS_STATUS_OK = 0,
  VCNLS_STATUS_NULL_POINTER = 1,
  VCNLS_STATUS_INVALID_ARGUMENT = 2,
  VCNLS_STATUS_UNKNOWN_SCENARIO = 3,
  VCNLS_STATUS_MALFORMED_SCENARIO = 4,
  VCNLS_STATUS_NUMERICAL = 5,
  VCNLS_STATUS_IO = 6,
  VCNLS_STATUS_BUFFER_TOO_SMALL = 7,
  VCNLS_STATUS_PANIC = 8,
} VcnlsStatus;

/**
 * An assembled exact solution.
 */
typedef struct VcnlsRun VcnlsRun;

/**
 * A loaded scenario.
 */
typedef struct VcnlsScenario VcnlsScenario;

/**
 * Phase functions at one time.
 */
typedef struct VcnlsPhases {
  double alpha;
  double beta;
  double gamma;
  double delta;
  double eps;
  double kappa;
  double mu;
} VcnlsPhases;

/**
 * Largest deviations found by [`vcnls_run_verify`]; NaN where a check does
 * not apply.
 */
typedef struct VcnlsVerifySummary {
  double pde_residual;
  double system_residual;
  double closed_form_deviation;
  double mass_law;
  bool passed;
} VcnlsVerifySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *vcnls_last_error_message(void);

/**
 * Clears the last error message of this thread.
 */
void vcnls_clear_error(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *vcnls_version(void);

/**
 * Writes the catalog scenario names, newline-separated and NUL-terminated,
 * into `buf`. `needed` (optional) receives the required size including the
 * terminator; `VCNLS_STATUS_BUFFER_TOO_SMALL` if `len` is short.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null with `len == 0`.
 */
enum VcnlsStatus vcnls_list_scenarios(char *buf, size_t len, size_t *needed);

/**
 * Loads a catalog scenario by name or a scenario file by path.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum VcnlsStatus vcnls_scenario_load(const char *name, struct VcnlsScenario **out);

/**
 * Spatial dimension (1 or 2) of a scenario.
 *
 * # Safety
 * `scenario` must come from [`vcnls_scenario_load`]; `dim` must be writable.
 */
enum VcnlsStatus vcnls_scenario_dimension(const struct VcnlsScenario *scenario, uint32_t *dim);

/**
 * # Safety
 * `scenario` must come from [`vcnls_scenario_load`] or be null.
 */
void vcnls_scenario_free(struct VcnlsScenario *scenario);

/**
 * Assembles the scenario's exact solution. `keys`/`values` hold `n`
 * parameter overrides (`alpha0`, `delta0`, a seed's `v`, …); both may be
 * null when `n == 0`.
 *
 * # Safety
 * `keys` and `values` must be valid for `n` elements; `out` writable.
 */
enum VcnlsStatus vcnls_run_assemble(const struct VcnlsScenario *scenario,
                                    const char *const *keys,
                                    const double *values,
                                    size_t n,
                                    struct VcnlsRun **out);

/**
 * # Safety
 * `run` must come from [`vcnls_run_assemble`] or be null.
 */
void vcnls_run_free(struct VcnlsRun *run);

/**
 * `ψ(t, x, y)`; `y` is ignored for 1D solutions.
 *
 * # Safety
 * `run` must be a live handle; `re` and `im` writable.
 */
enum VcnlsStatus vcnls_run_psi(const struct VcnlsRun *run,
                               double t,
                               double x,
                               double y,
                               double *re,
                               double *im);

/**
 * Phase functions at `t`.
 *
 * # Safety
 * `run` must be a live handle; `out` writable.
 */
enum VcnlsStatus vcnls_run_phases(const struct VcnlsRun *run, double t, struct VcnlsPhases *out);

/**
 * Predicted blow-up time; `*found` is false (and `*t_star` NaN) when `μ`
 * keeps its sign.
 *
 * # Safety
 * `run` must be a live handle; `t_star` and `found` writable.
 */
enum VcnlsStatus vcnls_run_blowup_time(const struct VcnlsRun *run, double *t_star, bool *found);

/**
 * Residual checks on `grid` (`"t0:t1:nt,x0:x1:nx[,y0:y1:ny]"`, or null for
 * the scenario grid) with PDE threshold `threshold`.
 *
 * # Safety
 * `run` must be a live handle; `grid` null or NUL-terminated; `out` writable.
 */
enum VcnlsStatus vcnls_run_verify(const struct VcnlsRun *run,
                                  const char *grid,
                                  double threshold,
                                  struct VcnlsVerifySummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VCNLS_H */

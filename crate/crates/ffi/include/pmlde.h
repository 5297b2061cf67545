#ifndef PMLDE_H
#define PMLDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PmldeStatus {
  PMLDE_STATUS_OK = 0,
  PMLDE_STATUS_INVALID_ARGUMENT = 1,
  PMLDE_STATUS_CONFIG = 2,
  PMLDE_STATUS_SOLVER = 3,
  PMLDE_STATUS_GEOMETRY = 4,
  PMLDE_STATUS_IO = 5,
  PMLDE_STATUS_PANIC = 6,
} PmldeStatus;

// Opaque simulation handle.
typedef struct PmldeSimulation PmldeSimulation;

// One row of the energy ledger.
typedef struct PmldeEnergyRow {
  uint64_t n;
  double t;
  double e_embed;
  double dissipation;
  double remainder;
  double residual;
  double e_phys_level0;
  double e_phys_all;
  uint64_t solver_iters;
} PmldeEnergyRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a simulation from a shipped preset name.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum PmldeStatus pmlde_simulation_from_preset(const char *name, struct PmldeSimulation **out);

// Creates a simulation from TOML configuration text.
//
// # Safety
// `toml` must be a NUL-terminated string and `out` a valid pointer.
enum PmldeStatus pmlde_simulation_from_toml(const char *toml, struct PmldeSimulation **out);

// Releases a handle; null is ignored.
//
// # Safety
// `sim` must come from one of the constructors and not be used afterwards.
void pmlde_simulation_free(struct PmldeSimulation *sim);

// Advances one step; `row` may be null.
//
// # Safety
// `sim` must be a live handle; `row`, when non-null, must be writable.
enum PmldeStatus pmlde_simulation_step(struct PmldeSimulation *sim, struct PmldeEnergyRow *row);

// Advances until the configured end time.
//
// # Safety
// `sim` must be a live handle.
enum PmldeStatus pmlde_simulation_run(struct PmldeSimulation *sim);

// Current simulated time and step index.
//
// # Safety
// `sim` must be a live handle; `t` and `n` may be null.
enum PmldeStatus pmlde_simulation_time(const struct PmldeSimulation *sim, double *t, uint64_t *n);

// Writes 1 to `done` once the end time is reached, else 0.
//
// # Safety
// `sim` must be a live handle and `done` writable.
enum PmldeStatus pmlde_simulation_is_done(const struct PmldeSimulation *sim, int32_t *done);

// Base grid size and number of refinement levels currently in use.
//
// # Safety
// `sim` must be a live handle; outputs may be null.
enum PmldeStatus pmlde_simulation_dims(const struct PmldeSimulation *sim,
                                       size_t *nx,
                                       size_t *ny,
                                       size_t *levels);

// Copies the base-level pressure, row-major with `x` fastest, into `buf`.
//
// # Safety
// `sim` must be a live handle and `buf` must hold `len` doubles.
enum PmldeStatus pmlde_simulation_copy_pressure(const struct PmldeSimulation *sim,
                                                double *buf,
                                                size_t len);

// Last ledger row; fails before the first step.
//
// # Safety
// `sim` must be a live handle and `row` writable.
enum PmldeStatus pmlde_simulation_last_row(const struct PmldeSimulation *sim,
                                           struct PmldeEnergyRow *row);

// Writes a checkpoint file.
//
// # Safety
// `sim` must be a live handle and `path` a NUL-terminated string.
enum PmldeStatus pmlde_simulation_save_checkpoint(const struct PmldeSimulation *sim,
                                                  const char *path);

// Indicator profile `1 / (exp(6 r / eps) + 1)`; NaN for non-positive `eps`.
double pmlde_psi_eps(double r, double eps);

// Message of the last failure on this thread, or null. Valid until the next failing call.
const char *pmlde_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *pmlde_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PMLDE_H */

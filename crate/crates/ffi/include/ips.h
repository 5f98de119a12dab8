#ifndef IPS_H
#define IPS_H

#pragma once

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum IpsStatus {
  IPS_STATUS_OK = 0,
  IPS_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside the domain of the operation.
   */
  IPS_STATUS_INVALID_ARGUMENT = 2,
  IPS_STATUS_UNSUPPORTED = 3,
  /**
   * A pathwise invariant failed; indicates a bug.
   */
  IPS_STATUS_INVARIANT = 4,
  IPS_STATUS_IO = 5,
  IPS_STATUS_OTHER = 6,
  IPS_STATUS_PANIC = 7,
} IpsStatus;

typedef enum IpsModelKind {
  IPS_MODEL_KIND_RM = 0,
  IPS_MODEL_KIND_CP = 1,
  IPS_MODEL_KIND_RMS = 2,
  IPS_MODEL_KIND_CPS = 3,
} IpsModelKind;

/**
 * A box `{-R..R}^d`.
 */
typedef struct IpsLattice IpsLattice;

/**
 * The outcome of one run.
 */
typedef struct IpsTrajectory IpsTrajectory;

/**
 * Model rates; `gamma` is ignored without healing, `nu` without stirring.
 */
typedef struct IpsModel {
  enum IpsModelKind kind;
  double lambda;
  double gamma;
  double nu;
} IpsModel;

/**
 * Threshold bounds on the `d`-ary tree for one stirring rate.
 */
typedef struct IpsThresholdRow {
  uint32_t d;
  double nu;
  double rms_lo;
  double rms_hi;
  double cps_lo;
  double cps_hi;
  double cps_weak_hi;
  bool in_w;
} IpsThresholdRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Valid until the next call
 * into the library from the same thread.
 */
const char *ips_last_error(void);

/**
 * Creates the box `{-radius..radius}^d`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum IpsStatus ips_lattice_new(uint32_t d, uint32_t radius, struct IpsLattice **out);

/**
 * # Safety
 * `lattice` must come from [`ips_lattice_new`] or be null.
 */
void ips_lattice_free(struct IpsLattice *lattice);

/**
 * Number of sites of the box, 0 for a null handle.
 *
 * # Safety
 * `lattice` must be a live handle or null.
 */
size_t ips_lattice_site_count(const struct IpsLattice *lattice);

/**
 * Runs one model from `n_initial` sites given as `n_initial * d`
 * row-major coordinates (the origin when `n_initial` is 0).
 *
 * # Safety
 * Pointers must be valid; `initial` must hold `n_initial * d` integers.
 */
enum IpsStatus ips_simulate(const struct IpsLattice *lattice,
                            const struct IpsModel *model,
                            const int32_t *initial,
                            size_t n_initial,
                            double horizon,
                            uint64_t seed,
                            struct IpsTrajectory **out);

/**
 * # Safety
 * `traj` must come from [`ips_simulate`] or be null.
 */
void ips_trajectory_free(struct IpsTrajectory *traj);

/**
 * Number of infected sites at the end of the run.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
size_t ips_trajectory_final_size(const struct IpsTrajectory *traj);

/**
 * Copies the final infected sites as row-major coordinates into `coords`
 * (capacity `cap` integers) and stores the number of sites in `written`.
 *
 * # Safety
 * `coords` must hold `cap` integers; other pointers must be valid.
 */
enum IpsStatus ips_trajectory_final_sites(const struct IpsTrajectory *traj,
                                          int32_t *coords,
                                          size_t cap,
                                          size_t *written);

/**
 * Extinction time, or a negative value if the process survived the run.
 *
 * # Safety
 * `traj` must be a live handle or null.
 */
double ips_trajectory_extinction(const struct IpsTrajectory *traj);

/**
 * Runs the coupled lower, middle and upper processes of a stirring model
 * from the origin and reports in `contained` whether they stayed nested.
 *
 * # Safety
 * Pointers must be valid.
 */
enum IpsStatus ips_containment_check(const struct IpsLattice *lattice,
                                     const struct IpsModel *model,
                                     double horizon,
                                     uint64_t seed,
                                     bool *contained);

/**
 * `(d+1)/(2√d) − 1`, or NaN for `d < 2`.
 */
double ips_tree_lambda_star(uint32_t d);

/**
 * # Safety
 * `out` must be valid.
 */
enum IpsStatus ips_tree_threshold_row(uint32_t d, double nu, struct IpsThresholdRow *out);

/**
 * Whether the CPS weak-survival upper bound falls below its
 * strong-survival lower bound at `(d, nu)`, i.e. `nu f(d) > 2√d`.
 *
 * # Safety
 * `out` must be valid.
 */
enum IpsStatus ips_tree_in_w(uint32_t d, double nu, bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPS_H */

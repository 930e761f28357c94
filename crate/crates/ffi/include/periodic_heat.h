/* C interface to the periodic heat solver. Link against libperiodic_heat_ffi. */

#ifndef PERIODIC_HEAT_H
#define PERIODIC_HEAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `PH_STATUS_OK` is zero; everything else is a failure.
typedef enum ph_status {
  PH_STATUS_OK = 0,
  PH_STATUS_NULL_POINTER = 1,
  PH_STATUS_INVALID_ARGUMENT = 2,
  PH_STATUS_DIMENSION_MISMATCH = 3,
  PH_STATUS_NOT_POSITIVE_DEFINITE = 4,
  PH_STATUS_EIGEN_NO_CONVERGENCE = 5,
  PH_STATUS_EXP_OVERFLOW = 6,
  PH_STATUS_NON_CONTRACTION = 7,
  PH_STATUS_KAPPA_NOT_CONTRACTIVE = 8,
  PH_STATUS_KAPPA_MISMATCH = 9,
  PH_STATUS_FORCING_EVALUATION = 10,
  PH_STATUS_BUFFER_TOO_SMALL = 11,
  PH_STATUS_PANIC = 12,
} ph_status;

// Opaque handle to a sampled periodic trajectory.
typedef struct ph_solution ph_solution;

// Opaque solver handle.
typedef struct ph_solver ph_solver;

// Space-time forcing `f(x, t)` on `(0, 1)`. Must return a finite value.
typedef double (*ph_field_fn)(double x, double t, void *user_data);

// Writes the load vector at time `t` into `out[0..dim]`. Returns 0 on
// success and nonzero on failure.
typedef int (*ph_load_fn)(double t, double *out, size_t dim, void *user_data);

// Inputs of the a priori bounds.
typedef struct ph_bound_inputs {
  double nu;
  double period;
  double lambda1;
  double c_p;
  double c_omega;
  double c_inv;
  double c_j;
  double f_norm;
} ph_bound_inputs;

// A priori bound constants and values. All values are plain floating point,
// without rigorous rounding control.
typedef struct ph_bound_report {
  double kappa1;
  double k1;
  double k2;
  double h1_bound;
  double l2_bound;
  double u0_l2_a;
  double u0_l2_b;
  double u0_grad;
  double ut_norm;
  double energy;
  // Nonzero when `exp(-nu lambda1 T)` underflowed and was treated as zero.
  int underflow_clamped;
} ph_bound_report;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates a solver for `n_elements` uniform P1 elements on `(0, 1)`.
//
// `quad_order` is the Gauss–Legendre order used for the load vectors (0
// selects the default). `f` and `user_data` must stay valid until the
// solver is freed.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum ph_status ph_solver_new_1d(size_t n_elements,
                                double nu,
                                double period,
                                ph_field_fn f,
                                void *user_data,
                                size_t quad_order,
                                struct ph_solver **out);

// Creates a solver from an externally assembled symmetric positive definite
// pair. `mass` and `stiffness` are `dim * dim` row-major arrays and are
// copied. `load` and `user_data` must stay valid until the solver is freed.
//
// # Safety
// `mass` and `stiffness` must point to `dim * dim` readable doubles; `out`
// must be valid for one handle.
enum ph_status ph_solver_new_matrices(size_t dim,
                                      const double *mass,
                                      const double *stiffness,
                                      double nu,
                                      double period,
                                      ph_load_fn load,
                                      void *user_data,
                                      struct ph_solver **out);

// Releases a solver. Null is ignored.
//
// # Safety
// `solver` must be null or a handle from a `ph_solver_new*` function that
// has not been freed.
void ph_solver_free(struct ph_solver *solver);

// Number of unknowns, or 0 for a null handle.
//
// # Safety
// `solver` must be null or a live handle.
size_t ph_solver_dim(const struct ph_solver *solver);

// Contraction factor of the discrete period map in the energy norm.
//
// # Safety
// `solver` must be a live handle and `out` valid for one double.
enum ph_status ph_solver_kappa1(const struct ph_solver *solver, double *out);

// Samples the periodic solution at `t_j = j T / m`, `j = 0..=m`.
//
// The forcing integrals use `panels` composite Gauss–Legendre panels of
// order `quad_order`; 0 selects the defaults (`m` panels, order 5).
// `panels` must be a multiple of `m`.
//
// # Safety
// `solver` must be a live handle and `out` valid for one handle.
enum ph_status ph_solver_solve(const struct ph_solver *solver,
                               size_t m,
                               size_t quad_order,
                               size_t panels,
                               struct ph_solution **out);

// Releases a solution. Null is ignored.
//
// # Safety
// `solution` must be null or a live handle from [`ph_solver_solve`].
void ph_solution_free(struct ph_solution *solution);

// Number of unknowns and number of time samples (`m + 1`).
//
// # Safety
// `solution` must be a live handle; `dim` and `samples` valid for writing.
enum ph_status ph_solution_shape(const struct ph_solution *solution, size_t *dim, size_t *samples);

// Copies the coefficients into `buf`, one time sample after another:
// `buf[j * dim + i]` is unknown `i` at `t_j`. `len` is the capacity of
// `buf` in doubles and must be at least `dim * samples`.
//
// # Safety
// `solution` must be a live handle and `buf` valid for `len` doubles.
enum ph_status ph_solution_coeffs(const struct ph_solution *solution, double *buf, size_t len);

// Evaluates the a priori bounds for the given inputs and contraction factor.
//
// # Safety
// `inputs` must be readable and `out` writable.
enum ph_status ph_bounds(const struct ph_bound_inputs *inputs,
                         double kappa1,
                         struct ph_bound_report *out);

// Static description of a status code.
const char *ph_status_message(enum ph_status status);

// Message of the most recent failure on this thread, or null if none. The
// pointer stays valid until the next failing call on the same thread.
const char *ph_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERIODIC_HEAT_H */

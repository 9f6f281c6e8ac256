#ifndef NCKANT_H
#define NCKANT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NckStatus {
  NckStatus_Ok = 0,
  NckStatus_InvalidArgument = 1,
  /**
   * Output was written but the solver did not reach the requested gap.
   */
  NckStatus_NotConverged = 2,
  /**
   * No feasible coupling; the value written is `+inf`.
   */
  NckStatus_Infeasible = 3,
  NckStatus_NullPointer = 4,
  NckStatus_Internal = 5,
} NckStatus;

/**
 * Opaque finite cost space.
 */
typedef struct NckCostSpace NckCostSpace;

/**
 * Opaque density matrix.
 */
typedef struct NckState NckState;

/**
 * Opaque finite spectral triple.
 */
typedef struct NckTriple NckTriple;

typedef struct NckSolverOptions {
  double tol;
  uint64_t max_iter;
  uint64_t restarts;
  uint64_t seed;
} NckSolverOptions;

typedef struct NckDistance {
  bool finite;
  /**
   * `+inf` when `finite` is false.
   */
  double value;
  double gap;
  uint64_t iterations;
  bool converged;
} NckDistance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *nck_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nck_version(void);

struct NckSolverOptions nck_solver_options_default(void);

/**
 * Parses a triple from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NckStatus nck_triple_from_json(const char *json, struct NckTriple **out);

/**
 * Two-point triple `C²` with off-diagonal Dirac entry `m`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NckStatus nck_triple_two_point(double m_re, double m_im, struct NckTriple **out);

/**
 * `M₂(C)` with Dirac operator `diag(d1, d2)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NckStatus nck_triple_m2_diagonal(double d1, double d2, struct NckTriple **out);

/**
 * Hilbert-space dimension, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
uintptr_t nck_triple_hilbert_dim(const struct NckTriple *t);

/**
 * # Safety
 * `t` must be null or a handle not yet freed.
 */
void nck_triple_free(struct NckTriple *t);

/**
 * Qubit state with Bloch vector `(x, y, z)`, `x² + y² + z² ≤ 1`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NckStatus nck_state_from_bloch(double x, double y, double z, struct NckState **out);

/**
 * Projector on the `k`-th (0-based) basis vector of `C^dim`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NckStatus nck_state_basis(uintptr_t dim, uintptr_t k, struct NckState **out);

/**
 * Parses `{"matrix": ...}` or `{"bloch": [x, y, z]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NckStatus nck_state_from_json(const char *json, struct NckState **out);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void nck_state_free(struct NckState *s);

/**
 * Spectral distance between two states. `opts` may be null for defaults.
 * Returns `NotConverged` (with `out` filled) when the gap target was missed.
 *
 * # Safety
 * Handles must be live; `opts` null or valid; `out` valid.
 */
enum NckStatus nck_spectral_distance(const struct NckTriple *t,
                                     const struct NckState *a,
                                     const struct NckState *b,
                                     const struct NckSolverOptions *opts,
                                     struct NckDistance *out);

/**
 * `n` equally spaced points on the unit circle.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NckStatus nck_cost_space_cycle(uintptr_t n, struct NckCostSpace **out);

/**
 * `n` interior points `k/(n+1)` of the unit interval.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum NckStatus nck_cost_space_interval(uintptr_t n, struct NckCostSpace **out);

/**
 * Two copies of `base` joined with crossing cost `√(d² + inv_m²)`.
 *
 * # Safety
 * `base` must be live and `out` valid.
 */
enum NckStatus nck_cost_space_two_sheet(const struct NckCostSpace *base,
                                        double inv_m,
                                        struct NckCostSpace **out);

/**
 * Parses `{"points", "cost", "metric"}`; infinite costs are the string `"inf"`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NckStatus nck_cost_space_from_json(const char *json, struct NckCostSpace **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
uintptr_t nck_cost_space_size(const struct NckCostSpace *s);

/**
 * # Safety
 * `s` must be null or a handle not yet freed.
 */
void nck_cost_space_free(struct NckCostSpace *s);

/**
 * Wasserstein-1 distance. `plan` may be null, otherwise it receives the
 * row-major `len × len` optimal coupling.
 *
 * # Safety
 * `mu`, `nu` must hold `len` doubles and `plan` (if not null) `len * len`.
 */
enum NckStatus nck_wasserstein(const struct NckCostSpace *space,
                               const double *mu,
                               const double *nu,
                               uintptr_t len,
                               double *plan,
                               double *value);

/**
 * Kantorovich dual value and potential. On non-metric spaces
 * `target_potential` (if not null) receives the second potential; on metric
 * spaces it is filled with the negated potential.
 *
 * # Safety
 * `mu`, `nu` must hold `len` doubles; `potential` and `target_potential`
 * must be null or hold `len` doubles.
 */
enum NckStatus nck_kantorovich_dual(const struct NckCostSpace *space,
                                    const double *mu,
                                    const double *nu,
                                    uintptr_t len,
                                    double *potential,
                                    double *target_potential,
                                    double *value);

/**
 * Moyal-ball cost between Bloch points `p[3]` and `q[3]`.
 *
 * # Safety
 * `p`, `q` must hold 3 doubles and `out` be valid.
 */
enum NckStatus nck_moyal_ball_cost(const double *p, const double *q, double theta, double *out);

/**
 * Crossing cost `√(d² + inv_m²)` of the two-sheet model.
 *
 * # Safety
 * `out` must be valid.
 */
enum NckStatus nck_two_sheet_cost(double base_distance, double inv_m, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCKANT_H */

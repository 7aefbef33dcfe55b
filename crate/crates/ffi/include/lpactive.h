#ifndef LPACTIVE_H
#define LPACTIVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * How a run ended, reported by [`lpa_trace_status`].
 */
typedef enum LpaRunStatus {
  LPA_RUN_STATUS_CONVERGED = 0,
  LPA_RUN_STATUS_ITERATION_TARGET = 1,
  LPA_RUN_STATUS_ITER_LIMIT = 2,
  LPA_RUN_STATUS_ILL_CONDITIONED = 3,
} LpaRunStatus;

typedef enum LpaStatus {
  LPA_STATUS_OK = 0,
  LPA_STATUS_NULL_POINTER = 1,
  LPA_STATUS_INVALID_ARGUMENT = 2,
  LPA_STATUS_BUFFER_TOO_SMALL = 3,
  LPA_STATUS_OUT_OF_RANGE = 4,
  LPA_STATUS_IO = 5,
  LPA_STATUS_PARSE = 6,
  LPA_STATUS_UNSUPPORTED_BOUND = 7,
  LPA_STATUS_INFEASIBLE = 8,
  LPA_STATUS_RANK_DEFICIENT = 9,
  LPA_STATUS_ILL_CONDITIONED = 10,
  LPA_STATUS_CONTRACT = 11,
  LPA_STATUS_SOLVER_STATUS = 12,
  LPA_STATUS_INTERNAL = 13,
  LPA_STATUS_PANIC = 14,
} LpaStatus;

/**
 * Problem data in standard form `min cᵀx, Ax = b, x ≥ 0`.
 */
typedef struct LpaProblem LpaProblem;

/**
 * Iteration history of one solve.
 */
typedef struct LpaTrace LpaTrace;

/**
 * Solver settings. Stopping tests with a value ≤ 0 are disabled; with all
 * three disabled the run stops at relres < 1e-8.
 */
typedef struct LpaSolveOptions {
  double initial_perturbation;
  double eta;
  double zeta;
  double cutoff;
  double step_fraction;
  uint32_t max_iters;
  double mu_cap;
  double relres_tol;
  /**
   * Perform exactly this many iterations when > 0.
   */
  uint32_t iterations;
} LpaSolveOptions;

typedef struct LpaRatios {
  double false_ratio;
  double missed_ratio;
  double correct_ratio;
} LpaRatios;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *lpa_last_error_message(void);

struct LpaSolveOptions lpa_solve_options_default(void);

/**
 * Reads an MPS file and removes redundant equality rows.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LpaStatus lpa_problem_from_mps(const char *path, struct LpaProblem **out);

/**
 * Random instance: `kind` 0 gives a problem built around a feasible point,
 * 1 one built around a degenerate optimal solution. `m` is drawn from the
 * open interval `(m_lo, m_hi)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum LpaStatus lpa_problem_generate(uint32_t kind,
                                    uint64_t seed,
                                    size_t m_lo,
                                    size_t m_hi,
                                    struct LpaProblem **out);

/**
 * Builds a problem from a row-major `m×n` matrix.
 *
 * # Safety
 * `a` must hold `m*n` values, `b` `m`, `c` `n`; `out` must be writable.
 */
enum LpaStatus lpa_problem_from_dense(size_t m,
                                      size_t n,
                                      const double *a,
                                      const double *b,
                                      const double *c,
                                      struct LpaProblem **out);

/**
 * # Safety
 * `p` must be a live handle; `m` and `n` writable.
 */
enum LpaStatus lpa_problem_dims(const struct LpaProblem *p, size_t *m, size_t *n);

/**
 * Objective value `cᵀx` plus any constant carried from the input.
 *
 * # Safety
 * `p` must be a live handle, `x` hold `n` values, `out` writable.
 */
enum LpaStatus lpa_problem_objective(const struct LpaProblem *p,
                                     const double *x,
                                     size_t n,
                                     double *out);

/**
 * Active set `{i : x_i < 1e-5}` of a reference solution; `oracle` 0 uses
 * the simplex method, 1 the unperturbed interior point method.
 *
 * # Safety
 * `p` must be a live handle; `buf` must hold `cap` entries; `len` writable.
 */
enum LpaStatus lpa_problem_active_set(const struct LpaProblem *p,
                                      uint32_t oracle,
                                      size_t *buf,
                                      size_t cap,
                                      size_t *len);

/**
 * # Safety
 * `p` must be null or a handle not yet freed.
 */
void lpa_problem_free(struct LpaProblem *p);

/**
 * Runs the interior point method from Mehrotra's starting point. `options`
 * may be null for the defaults.
 *
 * # Safety
 * `p` must be a live handle; `options` null or valid; `out` writable.
 */
enum LpaStatus lpa_solve(const struct LpaProblem *p,
                         const struct LpaSolveOptions *options,
                         struct LpaTrace **out);

/**
 * Number of recorded iterations.
 *
 * # Safety
 * `t` must be a live handle; `len` writable.
 */
enum LpaStatus lpa_trace_len(const struct LpaTrace *t, size_t *len);

/**
 * `iteration` receives the failing iteration for `IllConditioned`, else 0.
 *
 * # Safety
 * `t` must be a live handle; outputs writable.
 */
enum LpaStatus lpa_trace_status(const struct LpaTrace *t,
                                enum LpaRunStatus *status,
                                size_t *iteration);

/**
 * Duality measure and relative residual after iteration `k` (1-based).
 *
 * # Safety
 * `t` must be a live handle; outputs writable.
 */
enum LpaStatus lpa_trace_measures(const struct LpaTrace *t, size_t k, double *mu, double *relres);

/**
 * Copies `x`, `y`, `s` after iteration `k` (0 is the starting point).
 * Any output may be null to skip it.
 *
 * # Safety
 * `t` must be a live handle; non-null outputs must hold `n`, `m`, `n` values.
 */
enum LpaStatus lpa_trace_iterate(const struct LpaTrace *t,
                                 size_t k,
                                 double *x,
                                 double *y,
                                 double *s);

/**
 * Predicted active set after iteration `k` (empty for `k = 0`).
 *
 * # Safety
 * `t` must be a live handle; `buf` must hold `cap` entries; `len` writable.
 */
enum LpaStatus lpa_trace_predicted_active(const struct LpaTrace *t,
                                          size_t k,
                                          size_t *buf,
                                          size_t cap,
                                          size_t *len);

/**
 * # Safety
 * `t` must be a live handle; `path` NUL-terminated.
 */
enum LpaStatus lpa_trace_write_csv(const struct LpaTrace *t, const char *path);

/**
 * # Safety
 * `t` must be null or a handle not yet freed.
 */
void lpa_trace_free(struct LpaTrace *t);

/**
 * False / missed / correct fractions of a predicted against an actual set.
 *
 * # Safety
 * Arrays must hold the stated counts; `out` writable.
 */
enum LpaStatus lpa_prediction_ratios(const size_t *predicted,
                                     size_t predicted_len,
                                     const size_t *actual,
                                     size_t actual_len,
                                     struct LpaRatios *out);

/**
 * Shift λ with `(x*+λ)∘(s*+λ) = μ̂e` for a complementary pair.
 *
 * # Safety
 * `x`, `s` and `lambda` must hold `n` values.
 */
enum LpaStatus lpa_perfect_perturbation(const double *x,
                                        const double *s,
                                        size_t n,
                                        double mu_hat,
                                        double *lambda);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPACTIVE_H */

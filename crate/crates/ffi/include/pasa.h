/* Generated by cbindgen. Do not edit. */

#ifndef PASA_H
#define PASA_H

#include <stddef.h>
#include <stdint.h>

typedef enum PasaErrorCode {
  PASA_ERROR_CODE_OK = 0,
  PASA_ERROR_CODE_NULL_POINTER = 1,
  PASA_ERROR_CODE_INVALID_ARGUMENT = 2,
  PASA_ERROR_CODE_PARSE_ERROR = 3,
  PASA_ERROR_CODE_INFEASIBLE_PROBLEM = 4,
  PASA_ERROR_CODE_SOLVER_ERROR = 5,
  PASA_ERROR_CODE_PANIC = 6,
} PasaErrorCode;

/*
 Outcome of a solve.
 */
typedef enum PasaStatus {
  PASA_STATUS_CONVERGED = 0,
  PASA_STATUS_MAX_ITERATIONS = 1,
  PASA_STATUS_LINE_SEARCH_FAILURE = 2,
  PASA_STATUS_INFEASIBLE_PROBLEM = 3,
  PASA_STATUS_STATIONARY_START = 4,
} PasaStatus;

typedef struct PasaOptions PasaOptions;

/*
 A polyhedron together with an objective.
 */
typedef struct PasaProblem PasaProblem;

typedef struct PasaResult PasaResult;

/*
 Objective callback: returns `f(x)` and writes `∇f(x)` into `grad`. Both
 arrays have length `n`.
 */
typedef double (*PasaObjectiveFn)(void *user_data, const double *x, double *grad, size_t n);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread. Empty after a
 successful call. Valid until the next call on this thread.
 */
const char *pasa_last_error_message(void);

/*
 Library version as a static string.
 */
const char *pasa_version(void);

/*
 Parses a problem in the JSON problem format.

 # Safety
 `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PasaErrorCode pasa_problem_from_json(const char *json, struct PasaProblem **out);

/*
 Builds a problem from `A` in triplet form, bounds and an objective
 callback. Bound arrays may be null for "unbounded"; use `±INFINITY` for
 individual infinite entries.

 # Safety
 Triplet arrays must hold `nnz` entries, `bl`/`bu` `m` entries and
 `lo`/`hi` `n` entries when not null. `objective` must stay valid, and
 `user_data` usable by it, for the lifetime of the problem.
 */
enum PasaErrorCode pasa_problem_new(size_t n,
                                    size_t m,
                                    size_t nnz,
                                    const size_t *rows,
                                    const size_t *cols,
                                    const double *vals,
                                    const double *bl,
                                    const double *bu,
                                    const double *lo,
                                    const double *hi,
                                    PasaObjectiveFn objective,
                                    void *user_data,
                                    struct PasaProblem **out);

/*
 Number of variables, or 0 for a null handle.

 # Safety
 `problem` must be null or a live handle.
 */
size_t pasa_problem_dim(const struct PasaProblem *problem);

/*
 # Safety
 `problem` must be null or a handle not yet freed.
 */
void pasa_problem_free(struct PasaProblem *problem);

/*
 Default options.
 */
struct PasaOptions *pasa_options_new(void);

/*
 # Safety
 `options` must be null or a handle not yet freed.
 */
void pasa_options_free(struct PasaOptions *options);

/*
 Convergence tolerance on the global error.

 # Safety
 `options` must be a live handle.
 */
enum PasaErrorCode pasa_options_set_tau(struct PasaOptions *options, double tau);

/*
 # Safety
 `options` must be a live handle.
 */
enum PasaErrorCode pasa_options_set_theta(struct PasaOptions *options, double theta);

/*
 # Safety
 `options` must be a live handle.
 */
enum PasaErrorCode pasa_options_set_mu(struct PasaOptions *options, double mu);

/*
 # Safety
 `options` must be a live handle.
 */
enum PasaErrorCode pasa_options_set_max_iter(struct PasaOptions *options, size_t max_iter);

/*
 Nonzero selects the monotone line search.

 # Safety
 `options` must be a live handle.
 */
enum PasaErrorCode pasa_options_set_monotone(struct PasaOptions *options, int32_t monotone);

/*
 Solves `problem` from `x0`. `options` may be null for defaults; `x0` may
 be null to use the starting point stored in a JSON problem, or the
 origin.

 A result is produced whenever the solver ran, including unsuccessful
 statuses, which are read with [`pasa_result_status`].

 # Safety
 Handles must be live; `x0` must hold `pasa_problem_dim(problem)` values
 when not null; `out` must be valid.
 */
enum PasaErrorCode pasa_solve(const struct PasaProblem *problem,
                              const struct PasaOptions *options,
                              const double *x0,
                              struct PasaResult **out);

/*
 # Safety
 `result` must be a live handle.
 */
enum PasaStatus pasa_result_status(const struct PasaResult *result);

/*
 # Safety
 `result` must be a live handle.
 */
double pasa_result_objective(const struct PasaResult *result);

/*
 Final global stationarity error.

 # Safety
 `result` must be a live handle.
 */
double pasa_result_global_error(const struct PasaResult *result);

/*
 # Safety
 `result` must be a live handle.
 */
size_t pasa_result_iterations(const struct PasaResult *result);

/*
 Copies the solution into `x`, which must have room for `len` values;
 `len` must equal the problem dimension.

 # Safety
 `result` must be a live handle and `x` valid for `len` writes.
 */
enum PasaErrorCode pasa_result_x(const struct PasaResult *result, double *x, size_t len);

/*
 # Safety
 `result` must be null or a handle not yet freed.
 */
void pasa_result_free(struct PasaResult *result);

/*
 Euclidean projection of `x` onto the problem's polyhedron, written to
 `out`. Both arrays have length `len`, which must equal the dimension.

 # Safety
 `problem` must be live; `x` and `out` valid for `len` values.
 */
enum PasaErrorCode pasa_project(const struct PasaProblem *problem,
                                const double *x,
                                double *out,
                                size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PASA_H */

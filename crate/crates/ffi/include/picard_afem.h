#ifndef PICARD_AFEM_H
#define PICARD_AFEM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PafStatus {
  PAF_STATUS_OK = 0,
  PAF_STATUS_NULL_POINTER = 1,
  PAF_STATUS_INVALID_ARGUMENT = 2,
  PAF_STATUS_IO = 3,
  PAF_STATUS_MESH = 4,
  PAF_STATUS_SOLVER = 5,
  PAF_STATUS_PANIC = 6,
} PafStatus;

typedef enum PafProblem {
  PAF_PROBLEM_ZSHAPE_KNOWN = 0,
  PAF_PROBLEM_ZSHAPE_UNKNOWN = 1,
} PafProblem;

typedef enum PafTermination {
  PAF_TERMINATION_BUDGET_REACHED = 0,
  PAF_TERMINATION_LUCKY_BREAKDOWN = 1,
  PAF_TERMINATION_PICARD_NONTERMINATION = 2,
} PafTermination;

typedef enum PafRateAxis {
  PAF_RATE_AXIS_ELEMENTS = 0,
  PAF_RATE_AXIS_DOFS = 1,
  PAF_RATE_AXIS_WORK = 2,
} PafRateAxis;

/**
 * Opaque triangulation handle.
 */
typedef struct PafMesh PafMesh;

/**
 * Opaque adaptive trace handle.
 */
typedef struct PafTrace PafTrace;

/**
 * Adaptive loop parameters. A zero `max_elements` or `max_levels` means no limit.
 */
typedef struct PafDriverConfig {
  double theta;
  double lambda;
  bool nested;
  size_t max_dofs;
  size_t max_elements;
  size_t max_levels;
  size_t max_picard_iterations;
} PafDriverConfig;

/**
 * One level of an adaptive run; `h1_error` is NaN when the exact solution is unknown.
 */
typedef struct PafLevelRecord {
  size_t level;
  size_t n_elements;
  size_t n_dofs;
  double estimator;
  size_t picard_count;
  double h1_error;
  uint64_t cum_work;
} PafLevelRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL after a successful call.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *paf_last_error_message(void);

struct PafDriverConfig paf_driver_config_default(void);

/**
 * The built-in Z-shaped initial mesh; `neumann_corner` tags the edges at the reentrant corner as Neumann.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum PafStatus paf_mesh_zshape(bool neumann_corner,
                               struct PafMesh **out);

/**
 * Reads a mesh in the plain-text mesh format.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PafStatus paf_mesh_read(const char *path, struct PafMesh **out);

/**
 * # Safety
 * `mesh` must be a live handle and `path` a NUL-terminated string.
 */
enum PafStatus paf_mesh_write(const struct PafMesh *mesh, const char *path);

/**
 * Newest vertex bisection of the `n_marked` elements in `marked`, with closure.
 *
 * # Safety
 * `mesh` must be a live handle, `marked` must point to `n_marked` ids (or be NULL when `n_marked` is 0)
 * and `out` must be a valid pointer.
 */
enum PafStatus paf_mesh_refine(const struct PafMesh *mesh,
                               const size_t *marked,
                               size_t n_marked,
                               struct PafMesh **out);

/**
 * # Safety
 * `mesh` must be a live handle and `out` a valid pointer.
 */
enum PafStatus paf_mesh_num_elements(const struct PafMesh *mesh, size_t *out);

/**
 * # Safety
 * `mesh` must be a live handle and `out` a valid pointer.
 */
enum PafStatus paf_mesh_num_vertices(const struct PafMesh *mesh, size_t *out);

/**
 * # Safety
 * `mesh` must be NULL or a handle not yet freed.
 */
void paf_mesh_free(struct PafMesh *mesh);

/**
 * Runs the adaptive algorithm for a built-in benchmark. `initial_mesh` may be NULL to
 * use the benchmark's own initial mesh; otherwise it must be a refinement of it.
 *
 * # Safety
 * `config` and `out` must be valid pointers; `initial_mesh` must be NULL or a live handle.
 */
enum PafStatus paf_run_adaptive(enum PafProblem problem,
                                const struct PafMesh *initial_mesh,
                                const struct PafDriverConfig *config,
                                struct PafTrace **out);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum PafStatus paf_trace_len(const struct PafTrace *trace, size_t *out);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum PafStatus paf_trace_record(const struct PafTrace *trace,
                                size_t index,
                                struct PafLevelRecord *out);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum PafStatus paf_trace_termination(const struct PafTrace *trace, enum PafTermination *out);

/**
 * Fitted estimator rate `s` in `η ≈ C x^{−s}` over the trailing `window` fraction of levels.
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum PafStatus paf_trace_rate(const struct PafTrace *trace,
                              enum PafRateAxis axis,
                              double window,
                              double *out);

/**
 * Writes the trace as CSV with the header `level,n_elements,n_dofs,estimator,picard_count,h1_error,cum_work`.
 *
 * # Safety
 * `trace` must be a live handle and `path` a NUL-terminated string.
 */
enum PafStatus paf_trace_write_csv(const struct PafTrace *trace,
                                   const char *path);

/**
 * # Safety
 * `trace` must be NULL or a handle not yet freed.
 */
void paf_trace_free(struct PafTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PICARD_AFEM_H */

#ifndef SATQUBO_H
#define SATQUBO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  SQ_STATUS_PARSE = 3,
  SQ_STATUS_IO = 4,
  SQ_STATUS_TOO_LARGE = 5,
  SQ_STATUS_UNKNOWN_SPEC = 6,
  SQ_STATUS_UTF8 = 7,
  SQ_STATUS_BUFFER_TOO_SMALL = 8,
  SQ_STATUS_PANIC = 9,
} SqStatus;

typedef enum SqPrune {
  SQ_PRUNE_MIN = 0,
  SQ_PRUNE_RANDOM = 1,
} SqPrune;

typedef enum SqSolver {
  SQ_SOLVER_TABU = 0,
  SQ_SOLVER_SA = 1,
  SQ_SOLVER_BRUTE = 2,
  SQ_SOLVER_RANDOM = 3,
} SqSolver;

/**
 * A parsed or generated 3-CNF formula.
 */
typedef struct SqFormula SqFormula;

/**
 * A QUBO matrix together with its problem/auxiliary variable layout.
 */
typedef struct SqQubo SqQubo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *sq_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void sq_string_free(char *s);

/**
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum SqStatus sq_formula_parse_dimacs(const char *text, struct SqFormula **out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum SqStatus sq_formula_generate_balanced(size_t num_vars,
                                           size_t num_clauses,
                                           uint64_t seed,
                                           struct SqFormula **out);

/**
 * # Safety
 * `f` must be null or a live formula handle.
 */
size_t sq_formula_num_vars(const struct SqFormula *f);

/**
 * # Safety
 * `f` must be null or a live formula handle.
 */
size_t sq_formula_num_clauses(const struct SqFormula *f);

/**
 * # Safety
 * `f` must be a live formula handle and `out` a valid pointer.
 */
enum SqStatus sq_formula_to_dimacs(const struct SqFormula *f, char **out);

/**
 * Counts clauses satisfied by `bits` (one byte per variable, `len` must
 * equal the variable count).
 *
 * # Safety
 * `f` must be a live formula handle, `bits` must hold `len` bytes and
 * `out` must be a valid pointer.
 */
enum SqStatus sq_formula_count_satisfied(const struct SqFormula *f,
                                         const uint8_t *bits,
                                         size_t len,
                                         size_t *out);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void sq_formula_free(struct SqFormula *f);

/**
 * Builds the QUBO of `f` with a built-in transformation name or a bundle
 * directory path.
 *
 * # Safety
 * `f` must be a live formula handle, `method` a nul-terminated string and
 * `out` a valid pointer.
 */
enum SqStatus sq_qubo_assemble(const struct SqFormula *f, const char *method, struct SqQubo **out);

/**
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum SqStatus sq_qubo_parse(const char *text, struct SqQubo **out);

/**
 * # Safety
 * `q` must be a live QUBO handle and `out` a valid pointer.
 */
enum SqStatus sq_qubo_to_text(const struct SqQubo *q, char **out);

/**
 * # Safety
 * `q` must be null or a live QUBO handle.
 */
size_t sq_qubo_dim(const struct SqQubo *q);

/**
 * # Safety
 * `q` must be null or a live QUBO handle.
 */
size_t sq_qubo_num_problem_vars(const struct SqQubo *q);

/**
 * # Safety
 * `q` must be null or a live QUBO handle.
 */
size_t sq_qubo_nnz_offdiag(const struct SqQubo *q);

/**
 * # Safety
 * `q` must be a live QUBO handle, `bits` must hold `len` bytes and `out`
 * must be a valid pointer.
 */
enum SqStatus sq_qubo_energy(const struct SqQubo *q, const uint8_t *bits, size_t len, int64_t *out);

/**
 * Returns a new handle with `count` off-diagonal entries removed.
 *
 * # Safety
 * `q` must be a live QUBO handle and `out` a valid pointer.
 */
enum SqStatus sq_qubo_prune(const struct SqQubo *q,
                            enum SqPrune strategy,
                            size_t count,
                            uint64_t seed,
                            struct SqQubo **out);

/**
 * Runs `samples` independent solver runs and writes the lowest-energy
 * sample (earliest run on ties) to `out_bits`, which must hold
 * `sq_qubo_dim(q)` bytes. `iterations` is the tabu iteration count or the
 * annealing sweep count; zero selects the default.
 *
 * # Safety
 * `q` must be a live QUBO handle, `out_bits` must hold `out_len` bytes and
 * `out_energy` must be a valid pointer.
 */
enum SqStatus sq_qubo_solve(const struct SqQubo *q,
                            enum SqSolver solver,
                            size_t samples,
                            uint64_t iterations,
                            uint64_t seed,
                            uint8_t *out_bits,
                            size_t out_len,
                            int64_t *out_energy);

/**
 * Copies the problem-variable part of `bits` into `out_assignment`,
 * which must hold `sq_qubo_num_problem_vars(q)` bytes.
 *
 * # Safety
 * `q` must be a live QUBO handle, `bits` must hold `len` bytes and
 * `out_assignment` must hold `out_len` bytes.
 */
enum SqStatus sq_qubo_decode(const struct SqQubo *q,
                             const uint8_t *bits,
                             size_t len,
                             uint8_t *out_assignment,
                             size_t out_len);

/**
 * # Safety
 * `q` must be null or a handle not yet freed.
 */
void sq_qubo_free(struct SqQubo *q);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SATQUBO_H */

#ifndef STEINER_H
#define STEINER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SteinerStatus {
  STEINER_STATUS_OK = 0,
  STEINER_STATUS_NULL_POINTER = 1,
  STEINER_STATUS_INVALID_ARGUMENT = 2,
  STEINER_STATUS_CHECK_FAILED = 3,
  STEINER_STATUS_LIMIT_EXCEEDED = 4,
  STEINER_STATUS_PANIC = 5,
} SteinerStatus;

typedef enum SteinerOp {
  STEINER_OP_ADD = 0,
  STEINER_OP_SUB = 1,
  STEINER_OP_MUL = 2,
  STEINER_OP_DIV = 3,
  STEINER_OP_NEG = 4,
  STEINER_OP_INV = 5,
  STEINER_OP_POW = 6,
} SteinerOp;

typedef enum SteinerSpace {
  STEINER_SPACE_PROJECTIVE = 0,
  STEINER_SPACE_AFFINE = 1,
} SteinerSpace;

/**
 * Opaque block graph handle.
 */
typedef struct SteinerBlockGraph SteinerBlockGraph;

/**
 * Opaque finite field handle.
 */
typedef struct SteinerField SteinerField;

/**
 * Strongly regular parameters and spectrum.
 */
typedef struct SteinerSrgParams {
  int64_t v;
  int64_t k;
  int64_t lambda;
  int64_t mu;
  int64_t r;
  int64_t s;
  int64_t m_r;
  int64_t m_s;
} SteinerSrgParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message of this thread, 0 if none.
 */
size_t steiner_last_error_length(void);

/**
 * Copies the last error message (NUL-terminated, truncated to fit) into
 * `buf`. Returns the number of bytes written without the NUL.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
size_t steiner_last_error_message(char *buf, size_t len);

/**
 * Creates GF(q) for a prime power `q`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SteinerStatus steiner_field_new(uint64_t q, struct SteinerField **out);

/**
 * # Safety
 * `field` must come from [`steiner_field_new`] and not be used afterwards.
 */
void steiner_field_free(struct SteinerField *field);

/**
 * Field order, 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live handle.
 */
uint32_t steiner_field_order(const struct SteinerField *field);

/**
 * `a op b` on element indices. `b` is ignored for `Neg` and `Inv` and is
 * the exponent for `Pow`.
 *
 * # Safety
 * `field` must be a live handle and `out` a valid pointer.
 */
enum SteinerStatus steiner_field_arith(const struct SteinerField *field,
                                       enum SteinerOp op,
                                       uint32_t a,
                                       int64_t b,
                                       uint32_t *out);

/**
 * Block graph of the projective or affine Steiner system of lines of
 * dimension `n` over GF(q).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SteinerStatus steiner_blockgraph_new(enum SteinerSpace space,
                                          size_t n,
                                          uint64_t q,
                                          struct SteinerBlockGraph **out);

/**
 * # Safety
 * `bg` must come from [`steiner_blockgraph_new`] and not be used afterwards.
 */
void steiner_blockgraph_free(struct SteinerBlockGraph *bg);

/**
 * Number of vertices, 0 for a null handle.
 *
 * # Safety
 * `bg` must be null or a live handle.
 */
size_t steiner_blockgraph_vertex_count(const struct SteinerBlockGraph *bg);

/**
 * 1 if the vertices are adjacent, 0 if not, -1 on bad arguments.
 *
 * # Safety
 * `bg` must be null or a live handle.
 */
int32_t steiner_blockgraph_adjacent(const struct SteinerBlockGraph *bg, size_t u, size_t w);

/**
 * Strongly regular parameters from the design.
 *
 * # Safety
 * `bg` must be a live handle and `out` a valid pointer.
 */
enum SteinerStatus steiner_srg_params(const struct SteinerBlockGraph *bg,
                                      struct SteinerSrgParams *out);

/**
 * Weight-distribution bound for the eigenvalue `theta`.
 *
 * # Safety
 * `bg` must be a live handle and `out` a valid pointer.
 */
enum SteinerStatus steiner_wdb(const struct SteinerBlockGraph *bg, int64_t theta, uint64_t *out);

/**
 * Checks the eigenvalue equation for the dense integer vector `values`
 * of length `len` (the vertex count). Returns `CheckFailed` with the first
 * violating vertex in `bad_vertex` when the equation fails.
 *
 * # Safety
 * `bg` must be a live handle, `values` valid for `len` reads and
 * `bad_vertex` null or valid.
 */
enum SteinerStatus steiner_verify_eigenfunction(const struct SteinerBlockGraph *bg,
                                                int64_t theta,
                                                const int64_t *values,
                                                size_t len,
                                                size_t *bad_vertex);

/**
 * Number of induced K_{a,a} subgraphs (unordered part pairs), giving up
 * with `LimitExceeded` beyond `vertex_limit` vertices.
 *
 * # Safety
 * `bg` must be a live handle and `out` a valid pointer.
 */
enum SteinerStatus steiner_count_complete_bipartite(const struct SteinerBlockGraph *bg,
                                                    size_t a,
                                                    size_t vertex_limit,
                                                    size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEINER_H */

#ifndef IN2V_H
#define IN2V_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define IN2V_ROLE_TRAIN 0

#define IN2V_ROLE_VAL 1

#define IN2V_ROLE_TEST 2

/**
 * Result codes shared by every fallible function.
 */
typedef enum In2vStatus {
  IN2V_STATUS_OK = 0,
  IN2V_STATUS_NULL_POINTER = 1,
  IN2V_STATUS_INVALID_ARGUMENT = 2,
  IN2V_STATUS_PARSE = 3,
  IN2V_STATUS_IO = 4,
  IN2V_STATUS_DEGENERATE_INPUT = 5,
  IN2V_STATUS_NUMERICAL = 6,
  IN2V_STATUS_PANIC = 7,
} In2vStatus;

/**
 * Dense row-major embedding matrix.
 */
typedef struct In2vEmbedding In2vEmbedding;

/**
 * Undirected graph in compressed sparse row form.
 */
typedef struct In2vGraph In2vGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *in2v_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *in2v_version(void);

/**
 * Builds a graph on `num_nodes` nodes from `num_edges` pairs `(src[i], dst[i])`.
 *
 * # Safety
 * `src` and `dst` must point to `num_edges` readable values; `out` must be writable.
 */
enum In2vStatus in2v_graph_from_edges(size_t num_nodes,
                                      const uint64_t *src,
                                      const uint64_t *dst,
                                      size_t num_edges,
                                      struct In2vGraph **out);

/**
 * Reads a whitespace-separated edge list file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum In2vStatus in2v_graph_load(const char *path, struct In2vGraph **out);

/**
 * # Safety
 * `g` must be null or a live handle.
 */
size_t in2v_graph_num_nodes(const struct In2vGraph *g);

/**
 * Number of stored adjacency entries (each undirected edge counts twice).
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t in2v_graph_num_directed_edges(const struct In2vGraph *g);

/**
 * # Safety
 * `g` must be null or a handle not freed before.
 */
void in2v_graph_free(struct In2vGraph *g);

/**
 * Copies a row-major `rows x dim` matrix into a new embedding.
 *
 * # Safety
 * `data` must point to `rows * dim` readable doubles; `out` must be writable.
 */
enum In2vStatus in2v_embedding_from_data(size_t rows,
                                         size_t dim,
                                         const double *data,
                                         struct In2vEmbedding **out);

/**
 * Reads a binary embedding file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum In2vStatus in2v_embedding_load(const char *path, struct In2vEmbedding **out);

/**
 * Writes the binary embedding format (values stored as f32).
 *
 * # Safety
 * `e` must be a live handle; `path` a NUL-terminated string.
 */
enum In2vStatus in2v_embedding_save(const struct In2vEmbedding *e, const char *path);

/**
 * # Safety
 * `e` must be null or a live handle.
 */
size_t in2v_embedding_rows(const struct In2vEmbedding *e);

/**
 * # Safety
 * `e` must be null or a live handle.
 */
size_t in2v_embedding_dim(const struct In2vEmbedding *e);

/**
 * Copies the row-major values into `out`, which must hold `rows * dim` doubles.
 *
 * # Safety
 * `e` must be a live handle; `out` must point to `len` writable doubles.
 */
enum In2vStatus in2v_embedding_copy(const struct In2vEmbedding *e, double *out, size_t len);

/**
 * # Safety
 * `e` must be null or a handle not freed before.
 */
void in2v_embedding_free(struct In2vEmbedding *e);

/**
 * Trains node2vec embeddings on `g`. `config_json` is a training config
 * document or null for defaults; `seed` replaces its seed.
 *
 * # Safety
 * `g` must be a live handle; `config_json` null or NUL-terminated; `out` writable.
 */
enum In2vStatus in2v_train(const struct In2vGraph *g,
                           const char *config_json,
                           uint64_t seed,
                           struct In2vEmbedding **out);

/**
 * Extends embeddings of the training nodes to all of `g`.
 *
 * `train_emb` row `i` belongs to the `i`-th smallest id in `train_nodes`.
 * `config_json` selects the method (`in2v`, `feature_propagation`, `matmul`)
 * and its parameters; null means post-hoc extension with lambda 1, delay 0.
 *
 * # Safety
 * Handles must be live; `train_nodes` must point to `num_train` values.
 */
enum In2vStatus in2v_extend(const struct In2vGraph *g,
                            const struct In2vEmbedding *train_emb,
                            const uint64_t *train_nodes,
                            size_t num_train,
                            const char *config_json,
                            struct In2vEmbedding **out);

/**
 * Writes the role of every node (`IN2V_ROLE_*`) of a seeded random split.
 *
 * # Safety
 * `roles` must point to `num_nodes` writable bytes.
 */
enum In2vStatus in2v_split(size_t num_nodes, double train_fraction, uint64_t seed, uint8_t *roles);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IN2V_H */

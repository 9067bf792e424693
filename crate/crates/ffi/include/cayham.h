/* C interface for the cayham Hamilton-cycle toolkit. */

#pragma once

/* Generated with cbindgen:0.26.0 */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible entry point.
typedef enum CayhamStatus {
  // The call succeeded.
  CAYHAM_STATUS_OK = 0,
  // A required pointer argument was null.
  CAYHAM_STATUS_NULL_ARGUMENT = 1,
  // Arguments were structurally invalid (bad spec, bad generators,
  // out-of-range vertices, ...).  See `cayham_last_error_message`.
  CAYHAM_STATUS_INVALID_ARGUMENT = 2,
  // The instance is well-formed but the requested object does not exist
  // or could not be produced.  See `cayham_last_error_message`.
  CAYHAM_STATUS_UNSOLVABLE = 3,
  // A witness failed validation.  See `cayham_last_error_message`.
  CAYHAM_STATUS_INVALID_WITNESS = 4,
  // An internal panic was caught.  See `cayham_last_error_message`.
  CAYHAM_STATUS_INTERNAL_ERROR = 5,
} CayhamStatus;

// Opaque Cayley graph handle.
typedef struct CayhamGraph CayhamGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null when the
// last call succeeded.  The pointer stays valid until the next cayham
// call on the same thread; do not free it.
const char *cayham_last_error_message(void);

// Frees a string returned by this library.  Null is ignored.
//
// # Safety
// `s` must be a pointer previously returned through an out-string
// parameter of this library, or null.
void cayham_string_free(char *s);

// Builds a Cayley graph from a group spec (for example `"cyclic:12"`) and
// an explicit generator list; inverses are added automatically.  On
// success `*out` owns the new handle.
//
// # Safety
// `spec` must be a valid NUL-terminated string, `gens` must point to
// `gens_len` readable elements (or be null when `gens_len` is 0), and
// `out` must be a valid writable pointer.
enum CayhamStatus cayham_graph_new(const char *spec,
                                   const uint64_t *gens,
                                   uintptr_t gens_len,
                                   struct CayhamGraph **out);

// Builds a Cayley graph with a random symmetric generator set of density
// at least `sigma`, drawn deterministically from `seed`.
//
// # Safety
// `spec` must be a valid NUL-terminated string and `out` a valid
// writable pointer.
enum CayhamStatus cayham_graph_random(const char *spec,
                                      double sigma,
                                      uint64_t seed,
                                      struct CayhamGraph **out);

// Releases a graph handle.  Null is ignored.
//
// # Safety
// `g` must be a handle from `cayham_graph_new`/`cayham_graph_random`
// that has not been freed, or null.
void cayham_graph_free(struct CayhamGraph *g);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `g` must be a live handle or null.
uint64_t cayham_graph_order(const struct CayhamGraph *g);

// Vertex degree (= generator count), or 0 for a null handle.
//
// # Safety
// `g` must be a live handle or null.
uint64_t cayham_graph_degree(const struct CayhamGraph *g);

// Finds a Hamilton cycle.  On success `*out_json` holds a JSON object
// `{"witness": ..., "report": ...}` whose witness has been validated;
// free it with `cayham_string_free`.
//
// # Safety
// `g` must be a live handle and `out_json` a valid writable pointer.
enum CayhamStatus cayham_hamilton_json(const struct CayhamGraph *g, uint64_t seed, char **out_json);

// Finds a spanning linear forest whose path `j` runs between
// `pairs[2j]` and `pairs[2j+1]`.  On bipartite hosts every pair must
// cross the bipartition.  On success `*out_json` holds
// `{"witness": ..., "report": ...}`; free it with `cayham_string_free`.
//
// # Safety
// `g` must be a live handle, `pairs` must point to `2 * pair_count`
// readable elements, and `out_json` must be a valid writable pointer.
enum CayhamStatus cayham_forest_json(const struct CayhamGraph *g,
                                     const uint64_t *pairs,
                                     uintptr_t pair_count,
                                     uint64_t seed,
                                     char **out_json);

// Checks a caller-supplied Hamilton cycle witness against the graph.
// Returns `Ok` when valid and `InvalidWitness` (with a message) when not.
//
// # Safety
// `g` must be a live handle and `order` must point to `len` readable
// elements.
enum CayhamStatus cayham_verify_cycle(const struct CayhamGraph *g,
                                      const uint64_t *order,
                                      uintptr_t len);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

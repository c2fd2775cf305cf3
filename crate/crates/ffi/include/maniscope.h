#ifndef MANISCOPE_H
#define MANISCOPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsVariant {
  // 1 - d / max finite distance.
  MS_VARIANT_EQ3 = 0,
  // 1 / (1 + d).
  MS_VARIANT_INVERSE = 1,
} MsVariant;

typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_ARGUMENT = 2,
  MS_STATUS_DIMENSION_MISMATCH = 3,
  MS_STATUS_IO = 4,
  MS_STATUS_FORMAT = 5,
  MS_STATUS_ZERO_NORM = 6,
  MS_STATUS_BUFFER_TOO_SMALL = 7,
  MS_STATUS_INTERNAL = 99,
} MsStatus;

// Opaque corpus handle.
typedef struct MsCorpus MsCorpus;

typedef struct MsRerankConfig {
  size_t k;
  double alpha;
  enum MsVariant variant;
} MsRerankConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ms_version(void);

// Message for the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next `ms_*` call on this thread.
const char *ms_last_error_message(void);

// Defaults: k = 5, alpha = 0.5, max-normalized geodesic similarity.
struct MsRerankConfig ms_rerank_config_default(void);

// Loads a binary embedding file plus its id manifest.
//
// # Safety
// `emb_path` and `ids_path` must be NUL-terminated strings; `out` must be
// writable. On success `*out` owns a handle for [`ms_corpus_free`].
enum MsStatus ms_corpus_load(const char *emb_path, const char *ids_path, struct MsCorpus **out);

// Builds a corpus from `count` row-major vectors of length `dim`. Ids are
// the row indices as decimal strings.
//
// # Safety
// `data` must point to `count * dim` floats; `out` must be writable.
enum MsStatus ms_corpus_from_vectors(const float *data,
                                     size_t count,
                                     size_t dim,
                                     struct MsCorpus **out);

// Releases a corpus. NULL is ignored.
//
// # Safety
// `corpus` must come from an `ms_corpus_*` constructor and not be used again.
void ms_corpus_free(struct MsCorpus *corpus);

// Number of vectors; 0 for NULL.
//
// # Safety
// `corpus` must be NULL or a live handle.
size_t ms_corpus_count(const struct MsCorpus *corpus);

// Vector dimension; 0 for NULL.
//
// # Safety
// `corpus` must be NULL or a live handle.
size_t ms_corpus_dim(const struct MsCorpus *corpus);

// Id of row `index`, valid while the corpus lives; NULL if out of range.
//
// # Safety
// `corpus` must be NULL or a live handle.
const char *ms_corpus_id(const struct MsCorpus *corpus, size_t index);

// Scales every row to unit length in place.
//
// # Safety
// `corpus` must be a live handle.
enum MsStatus ms_corpus_normalize(struct MsCorpus *corpus);

// Retrieves the `top_m` nearest rows by cosine and reranks them. Writes
// corpus row indices (best first) and hybrid scores.
//
// # Safety
// `corpus` must be a live handle; `query` must hold `dim` floats;
// `out_indices` (and `out_scores` unless NULL) must hold `capacity` slots;
// `cfg` and `out_written` may be NULL.
enum MsStatus ms_search(const struct MsCorpus *corpus,
                        const float *query,
                        size_t dim,
                        size_t top_m,
                        const struct MsRerankConfig *cfg,
                        size_t *out_indices,
                        double *out_scores,
                        size_t capacity,
                        size_t *out_written);

// Reranks `count` candidate vectors against `query` without a corpus.
// Writes input positions (best first) and hybrid scores, `count` each.
//
// # Safety
// `query` must hold `dim` floats, `candidates` `count * dim` floats;
// `out_order` (and `out_scores` unless NULL) must hold `count` slots.
enum MsStatus ms_rerank_vectors(const float *query,
                                const float *candidates,
                                size_t count,
                                size_t dim,
                                const struct MsRerankConfig *cfg,
                                size_t *out_order,
                                double *out_scores);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MANISCOPE_H */

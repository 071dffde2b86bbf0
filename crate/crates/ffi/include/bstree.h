#ifndef BSTREE_H
#define BSTREE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BstStatus {
  BST_STATUS_OK = 0,
  BST_STATUS_NULL_POINTER = 1,
  BST_STATUS_INVALID_ARGUMENT = 2,
  BST_STATUS_DATA_ERROR = 3,
  BST_STATUS_BUFFER_TOO_SMALL = 4,
  BST_STATUS_PANIC = 5,
} BstStatus;

typedef enum BstQueryMode {
  BST_QUERY_MODE_APPROXIMATE = 0,
  BST_QUERY_MODE_EXACT = 1,
} BstQueryMode;

/**
 * An index fed point by point.
 */
typedef struct BstIndex BstIndex;

/**
 * Window ids returned by a query.
 */
typedef struct BstQueryResult BstQueryResult;

/**
 * Construction parameters. Start from [`bst_params_default`].
 */
typedef struct BstParams {
  size_t window_len;
  size_t slide;
  size_t word_len;
  size_t alphabet;
  size_t order;
  size_t mbr_capacity;
  size_t max_height;
  uint64_t prune_threshold;
  /**
   * Non-zero: the threshold is a maximum age instead of a clock value.
   */
  uint8_t age_mode;
  /**
   * Archived windows kept for exact queries; 0 keeps all.
   */
  size_t archive_capacity;
} BstParams;

typedef struct BstPruneReport {
  uint64_t clock;
  size_t visited;
  size_t kept;
  size_t pruned;
  size_t bridges;
  size_t old_height;
  size_t new_height;
} BstPruneReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *bst_last_error(void);

struct BstParams bst_params_default(void);

/**
 * # Safety
 * `params` must point to a valid `BstParams`; `out` must be writable.
 */
enum BstStatus bst_index_new(const struct BstParams *params, struct BstIndex **out);

/**
 * # Safety
 * `index` must come from `bst_index_new` and not be used afterwards.
 */
void bst_index_free(struct BstIndex *index);

/**
 * Appends stream values; `emitted` (optional) receives the number of
 * windows indexed by this call.
 *
 * # Safety
 * `index` must be a live handle; `values` must point to `len` doubles.
 */
enum BstStatus bst_index_push(struct BstIndex *index,
                              const double *values,
                              size_t len,
                              size_t *emitted);

/**
 * # Safety
 * `index` must be a live handle or null.
 */
size_t bst_index_height(const struct BstIndex *index);

/**
 * # Safety
 * `index` must be a live handle or null.
 */
size_t bst_index_element_count(const struct BstIndex *index);

/**
 * # Safety
 * `index` must be a live handle or null.
 */
size_t bst_index_window_count(const struct BstIndex *index);

/**
 * # Safety
 * `index` must be a live handle or null.
 */
size_t bst_index_prune_count(const struct BstIndex *index);

/**
 * Forces one prune cycle.
 *
 * # Safety
 * `index` must be a live handle; `report` may be null.
 */
enum BstStatus bst_index_prune(struct BstIndex *index, struct BstPruneReport *report);

/**
 * Range query. With `record_visit` non-zero the query advances the visit
 * clock and stamps the elements it enters.
 *
 * # Safety
 * `index` must be a live handle; `pattern` must point to `len` doubles;
 * `out` must be writable.
 */
enum BstStatus bst_index_query(struct BstIndex *index,
                               const double *pattern,
                               size_t len,
                               double radius,
                               enum BstQueryMode mode,
                               uint8_t record_visit,
                               struct BstQueryResult **out);

/**
 * # Safety
 * `result` must be a live result handle or null.
 */
size_t bst_result_len(const struct BstQueryResult *result);

/**
 * # Safety
 * `result` must be a live result handle or null.
 */
size_t bst_result_candidates(const struct BstQueryResult *result);

/**
 * # Safety
 * `result` must be a live result handle or null.
 */
size_t bst_result_unverifiable(const struct BstQueryResult *result);

/**
 * # Safety
 * `result` must be a live result handle or null.
 */
size_t bst_result_nodes_visited(const struct BstQueryResult *result);

/**
 * Copies the ascending window ids into `buf`.
 *
 * # Safety
 * `result` must be a live result handle; `buf` must hold `cap` values.
 */
enum BstStatus bst_result_ids(const struct BstQueryResult *result, uint64_t *buf, size_t cap);

/**
 * # Safety
 * `result` must come from `bst_index_query` and not be used afterwards.
 */
void bst_result_free(struct BstQueryResult *result);

/**
 * Writes the SAX word of `values` under the index configuration as a
 * NUL-terminated string.
 *
 * # Safety
 * `index` must be a live handle; `values` must point to `len` doubles;
 * `buf` must hold `cap` bytes.
 */
enum BstStatus bst_index_sax_word(const struct BstIndex *index,
                                  const double *values,
                                  size_t len,
                                  char *buf,
                                  size_t cap);

/**
 * Preorder text dump of the index; release with [`bst_string_free`].
 *
 * # Safety
 * `index` must be a live handle; `out` must be writable.
 */
enum BstStatus bst_index_dump(const struct BstIndex *index, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void bst_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BSTREE_H */

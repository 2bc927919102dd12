/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef VALUEPREF_H
#define VALUEPREF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VpStatus {
  VP_STATUS_OK = 0,
  VP_STATUS_NULL_POINTER = 1,
  VP_STATUS_INVALID_ARGUMENT = 2,
  VP_STATUS_VALIDATION = 3,
  VP_STATUS_IO = 4,
  VP_STATUS_PANIC = 5,
} VpStatus;

typedef enum VpMethod {
  VP_METHOD_C = 0,
  VP_METHOD_M = 1,
  VP_METHOD_TB = 2,
  VP_METHOD_MC = 3,
  VP_METHOD_MO = 4,
  VP_METHOD_COMB = 5,
} VpMethod;

typedef enum VpMcSemantics {
  VP_MC_SEMANTICS_PROSE = 0,
  VP_MC_SEMANTICS_PSEUDOCODE = 1,
} VpMcSemantics;

// A validated dataset.
typedef struct VpDataset VpDataset;

// One participant's estimate: ranking, optional utility, final matrix.
typedef struct VpEstimate VpEstimate;

// A value-option relevance matrix.
typedef struct VpVoMatrix VpVoMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into this library on the same thread.
const char *vp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *vp_version(void);

// Loads and validates a dataset file (and its ground-truth sidecar).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum VpStatus vp_dataset_load(const char *path, int lenient, struct VpDataset **out);

// Generates a synthetic dataset with default settings.
//
// # Safety
// `out` must be writable.
enum VpStatus vp_dataset_synthetic(size_t participants, uint64_t seed, struct VpDataset **out);

// Writes a dataset (and its ground truth, if any) to `path`.
//
// # Safety
// `ds` must come from this library; `path` must be NUL-terminated.
enum VpStatus vp_dataset_save(const struct VpDataset *ds, const char *path);

// # Safety
// `ds` must come from this library and not be used afterwards.
void vp_dataset_free(struct VpDataset *ds);

// Participant count; 0 for NULL.
//
// # Safety
// `ds` must be NULL or come from this library.
size_t vp_dataset_num_participants(const struct VpDataset *ds);

// # Safety
// `ds` must be NULL or come from this library.
size_t vp_dataset_num_values(const struct VpDataset *ds);

// # Safety
// `ds` must be NULL or come from this library.
size_t vp_dataset_num_options(const struct VpDataset *ds);

// Annotation counts, row-major `values × options`.
//
// # Safety
// `out` must hold `len` elements.
enum VpStatus vp_dataset_annotation_counts(const struct VpDataset *ds, uint64_t *out, size_t len);

// Matrix from a row-major 0/1 grid.
//
// # Safety
// `cells` must hold `rows * cols` bytes; `out` must be writable.
enum VpStatus vp_vo_new(size_t rows, size_t cols, const uint8_t *cells, struct VpVoMatrix **out);

// Thresholds the dataset's annotation counts: a cell is 1 iff at least
// `threshold` motivations for the option carry the value.
//
// # Safety
// `ds` must come from this library; `out` must be writable.
enum VpStatus vp_vo_from_annotations(const struct VpDataset *ds,
                                     uint64_t threshold,
                                     struct VpVoMatrix **out);

// # Safety
// `vo` must come from this library and not be used afterwards.
void vp_vo_free(struct VpVoMatrix *vo);

// # Safety
// `vo` must be NULL or come from this library.
size_t vp_vo_rows(const struct VpVoMatrix *vo);

// # Safety
// `vo` must be NULL or come from this library.
size_t vp_vo_cols(const struct VpVoMatrix *vo);

// Copies the matrix into a row-major 0/1 grid of `len` bytes.
//
// # Safety
// `out` must hold `len` bytes.
enum VpStatus vp_vo_cells(const struct VpVoMatrix *vo, uint8_t *out, size_t len);

// Estimates one participant of a dataset. `order` is the stage order of
// the combined method ("MO>MC>TB" when NULL).
//
// # Safety
// Handles must come from this library; `order` must be NULL or
// NUL-terminated; `out` must be writable.
enum VpStatus vp_estimate(const struct VpDataset *ds,
                          const struct VpVoMatrix *vo,
                          size_t participant,
                          enum VpMethod method,
                          enum VpMcSemantics semantics,
                          const char *order,
                          struct VpEstimate **out);

// # Safety
// `e` must come from this library and not be used afterwards.
void vp_estimate_free(struct VpEstimate *e);

// Number of values in the estimate; 0 for NULL.
//
// # Safety
// `e` must be NULL or come from this library.
size_t vp_estimate_len(const struct VpEstimate *e);

// Writes the group index of every value.
//
// # Safety
// `out` must hold `len` elements.
enum VpStatus vp_estimate_groups(const struct VpEstimate *e, size_t *out, size_t len);

// Writes the utility vector; sets `*has_utility` to 0 (and writes
// nothing else) when the method produced only a ranking.
//
// # Safety
// `out` must hold `len` elements; `has_utility` must be writable.
enum VpStatus vp_estimate_utility(const struct VpEstimate *e,
                                  uint64_t *out,
                                  size_t len,
                                  int *has_utility);

// Copies the matrix the estimate ended with into a new handle.
//
// # Safety
// `e` must come from this library; `out` must be writable.
enum VpStatus vp_estimate_vo(const struct VpEstimate *e, struct VpVoMatrix **out);

// Method-C utility of a point allocation: `out[v] = Σ_o vo[v][o]·points[o]`.
// The points must sum to the allocation's budget, which is their sum.
//
// # Safety
// `points` must hold `n_options` and `out` `n_values` elements.
enum VpStatus vp_utility(const struct VpVoMatrix *vo,
                         const uint64_t *points,
                         size_t n_options,
                         uint64_t *out,
                         size_t n_values);

// Ranks values by descending score; equal scores share a group.
//
// # Safety
// `scores` and `out_groups` must hold `n` elements.
enum VpStatus vp_rank_from_scores(const uint64_t *scores, size_t n, size_t *out_groups);

// Kemeny distance between two rankings given as group-index arrays
// (smaller index = more preferred; indices need not be contiguous).
//
// # Safety
// `a` and `b` must hold `n` elements; `out` must be writable.
enum VpStatus vp_kemeny_distance(const size_t *a, const size_t *b, size_t n, double *out);

// Thresholds a row-major `rows × cols` count grid into 0/1 cells.
//
// # Safety
// `counts` and `out_cells` must hold `rows * cols` elements.
enum VpStatus vp_init_vo(const uint64_t *counts,
                         size_t rows,
                         size_t cols,
                         uint64_t threshold,
                         uint8_t *out_cells);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VALUEPREF_H */

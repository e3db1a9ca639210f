#ifndef QDCA_H
#define QDCA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum QdcaStatus {
  QDCA_STATUS_OK = 0,
  QDCA_STATUS_NULL_POINTER = 1,
  QDCA_STATUS_INVALID_ARGUMENT = 2,
  QDCA_STATUS_DIMENSION_MISMATCH = 3,
  QDCA_STATUS_INSUFFICIENT_VOTES = 4,
  QDCA_STATUS_DEGENERATE = 5,
  QDCA_STATUS_NO_FINITE_SAMPLE_COUNT = 6,
  QDCA_STATUS_IO = 7,
  QDCA_STATUS_BUFFER_TOO_SMALL = 8,
  QDCA_STATUS_PANIC = 9,
} QdcaStatus;

/**
 * Opaque generated instance (matrix plus ground-truth anchors).
 */
typedef struct QdcaInstance QdcaInstance;

/**
 * Opaque non-negative data matrix.
 */
typedef struct QdcaMatrix QdcaMatrix;

/**
 * Parameters of the simulated quantum pipeline.
 */
typedef struct QdcaConfig {
  size_t r;
  /**
   * Base projection count; `2 s` directions are used.
   */
  size_t s;
  /**
   * Measurement budget per projection.
   */
  uint64_t samples;
  double epsilon;
  double delta;
  uint64_t seed;
  bool restrict_to_rows;
  /**
   * Take the mode of the exact outcome distribution instead of sampling.
   */
  bool exact;
  /**
   * Draw directions on the whole embedded sphere instead of the column block.
   */
  bool full_support;
  /**
   * Use `s` directions and their negations.
   */
  bool paired;
} QdcaConfig;

typedef struct QdcaGapReport {
  double p_max;
  double p_sec_max;
  double threshold;
  bool satisfied;
} QdcaGapReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *qdca_last_error_message(void);

/**
 * Copies a row-major `rows x cols` array into a new matrix handle.
 */
enum QdcaStatus qdca_matrix_new(const double *data,
                                size_t rows,
                                size_t cols,
                                struct QdcaMatrix **out);

/**
 * Reads a matrix CSV file (one row per line, no header).
 */
enum QdcaStatus qdca_matrix_read_csv(const char *path, struct QdcaMatrix **out);

void qdca_matrix_free(struct QdcaMatrix *m);

/**
 * Row count, or 0 for a null handle.
 */
size_t qdca_matrix_rows(const struct QdcaMatrix *m);

/**
 * Column count, or 0 for a null handle.
 */
size_t qdca_matrix_cols(const struct QdcaMatrix *m);

enum QdcaStatus qdca_matrix_get(const struct QdcaMatrix *m, size_t row, size_t col, double *out);

/**
 * Generates a separable instance; see `generate_separable` in the core crate.
 */
enum QdcaStatus qdca_instance_generate(size_t n,
                                       size_t m,
                                       size_t r,
                                       double noise_level,
                                       uint64_t seed,
                                       struct QdcaInstance **out);

void qdca_instance_free(struct QdcaInstance *inst);

/**
 * Borrowed view of the instance's data matrix; valid while the instance lives.
 */
const struct QdcaMatrix *qdca_instance_matrix(const struct QdcaInstance *inst);

/**
 * Copies the true anchor indexes into `out` (capacity `cap`) and stores
 * their count in `len`.
 */
enum QdcaStatus qdca_instance_anchors(const struct QdcaInstance *inst,
                                      size_t *out,
                                      size_t cap,
                                      size_t *len);

/**
 * Classical DCA. Writes `r` ascending anchor indexes to `out`.
 */
enum QdcaStatus qdca_dca_solve(const struct QdcaMatrix *m,
                               size_t r,
                               size_t s,
                               uint64_t seed,
                               size_t *out);

/**
 * Default pipeline parameters for an `n x m` input.
 */
struct QdcaConfig qdca_config_default(size_t n, size_t m, size_t r, uint64_t seed);

/**
 * Simulated quantum anchoring. Writes `cfg->r` ascending indexes to `out`.
 */
enum QdcaStatus qdca_qdca_solve(const struct QdcaMatrix *m,
                                const struct QdcaConfig *cfg,
                                size_t *out);

/**
 * Evaluates the recovery gap condition for `samples` draws from `p[0..k]`.
 */
enum QdcaStatus qdca_gap_condition(const double *p,
                                   size_t k,
                                   uint64_t samples,
                                   double delta,
                                   bool literal,
                                   struct QdcaGapReport *out);

/**
 * Smallest sample count satisfying the gap condition.
 */
enum QdcaStatus qdca_required_samples(const double *p,
                                      size_t k,
                                      double delta,
                                      bool literal,
                                      uint64_t *out);

/**
 * Fraction of `trials` in which the most frequent of `samples` draws is the
 * mode of `p`.
 */
enum QdcaStatus qdca_recovery_rate(const double *p,
                                   size_t k,
                                   uint64_t samples,
                                   size_t trials,
                                   uint64_t seed,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QDCA_H */

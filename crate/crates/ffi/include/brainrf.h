#ifndef BRAINRF_H
#define BRAINRF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum BrfStatus {
  BRF_STATUS_OK = 0,
  BRF_STATUS_NULL_POINTER = 1,
  BRF_STATUS_INVALID_INPUT = 2,
  BRF_STATUS_INVALID_CONFIG = 3,
  BRF_STATUS_PARSE = 4,
  BRF_STATUS_INTEGRITY = 5,
  BRF_STATUS_UNDEFINED_METRIC = 6,
  BRF_STATUS_TRAINING = 7,
  BRF_STATUS_INVALID_STATE = 8,
  BRF_STATUS_SYNTHESIS = 9,
  BRF_STATUS_IO = 10,
  BRF_STATUS_PANIC = 11,
} BrfStatus;

/**
 * Opaque dataset handle.
 */
typedef struct BrfDataset BrfDataset;

/**
 * Opaque trained decoder handle.
 */
typedef struct BrfDecoder BrfDecoder;

/**
 * Opaque experiment report handle.
 */
typedef struct BrfReport BrfReport;

/**
 * Fusion weights for the brain, click and pseudo-relevance channels.
 */
typedef struct BrfWeights {
  double theta_bs;
  double theta_c;
  double theta_p;
} BrfWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * Valid until the next call into this library on the same thread.
 */
const char *brf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *brf_version(void);

/**
 * NDCG at `k` of gains listed in ranked order.
 *
 * # Safety
 * `gains` must point to `n` values (or be NULL when `n == 0`); `out` must be writable.
 */
enum BrfStatus brf_ndcg(const uint32_t *gains, size_t n, size_t k, double *out);

/**
 * Average precision of a ranked relevance-flag list (nonzero = relevant).
 *
 * # Safety
 * `flags` must point to `n` bytes; `out` must be writable.
 */
enum BrfStatus brf_average_precision(const uint8_t *flags,
                                     size_t n,
                                     size_t total_relevant,
                                     double *out);

/**
 * Area under the ROC curve with tie-averaged ranks.
 *
 * # Safety
 * `scores` and `labels` must each point to `n` elements; `out` must be writable.
 */
enum BrfStatus brf_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Element-wise weighted fusion of three aligned score arrays into `out`.
 *
 * # Safety
 * `brain`, `click`, `pseudo` and `out` must each hold `n` doubles.
 */
enum BrfStatus brf_combine(const double *brain,
                           const double *click,
                           const double *pseudo,
                           size_t n,
                           struct BrfWeights weights,
                           double *out);

/**
 * Softmax of `n` scores into `out`.
 *
 * # Safety
 * `scores` and `out` must each hold `n` doubles.
 */
enum BrfStatus brf_softmax(const double *scores, size_t n, double *out);

/**
 * Loads and validates a dataset directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BrfStatus brf_dataset_load(const char *path, struct BrfDataset **out);

/**
 * Generates a synthetic cohort. `generator_json` may be NULL.
 *
 * # Safety
 * `generator_json` must be NULL or NUL-terminated; `out` must be writable.
 */
enum BrfStatus brf_dataset_generate(const char *generator_json,
                                    uint64_t seed,
                                    struct BrfDataset **out);

/**
 * Writes a dataset directory.
 *
 * # Safety
 * `dataset` must be a live handle; `path` NUL-terminated.
 */
enum BrfStatus brf_dataset_save(const struct BrfDataset *dataset, const char *path);

/**
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum BrfStatus brf_dataset_session_count(const struct BrfDataset *dataset, size_t *out);

/**
 * Releases a dataset. NULL is ignored.
 *
 * # Safety
 * `dataset` must come from this library and not be used afterwards.
 */
void brf_dataset_free(struct BrfDataset *dataset);

/**
 * Runs an experiment. `kind` is "irf", "rrf" or "adaptive"; `config_json`
 * is a run configuration or NULL for defaults.
 *
 * # Safety
 * Pointers must be valid as documented; `out` must be writable.
 */
enum BrfStatus brf_run(const struct BrfDataset *dataset,
                       const char *kind,
                       const char *config_json,
                       struct BrfReport **out);

/**
 * # Safety
 * `report` must be a live handle; outputs must be writable.
 */
enum BrfStatus brf_report_shape(const struct BrfReport *report,
                                size_t *rows,
                                size_t *methods,
                                size_t *columns);

/**
 * Mean of one method's metric column over all rows.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BrfStatus brf_report_aggregate(const struct BrfReport *report,
                                    size_t method,
                                    size_t column,
                                    double *out);

/**
 * Hex SHA-256 fingerprint, owned by the report; NULL for a NULL handle.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
const char *brf_report_fingerprint(const struct BrfReport *report);

/**
 * Writes `report.tsv` and `summary.json` into `dir`.
 *
 * # Safety
 * `report` must be a live handle; `dir` NUL-terminated.
 */
enum BrfStatus brf_report_write(const struct BrfReport *report, const char *dir);

/**
 * Releases a report. NULL is ignored.
 *
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void brf_report_free(struct BrfReport *report);

/**
 * Trains a decoder on `rows` row-major feature vectors of length `dim`.
 * `config_json` holds decoder settings or is NULL.
 *
 * # Safety
 * `features` must hold `rows * dim` doubles and `labels` `rows` bytes.
 */
enum BrfStatus brf_decoder_train(const double *features,
                                 size_t rows,
                                 size_t dim,
                                 const uint8_t *labels,
                                 const char *config_json,
                                 struct BrfDecoder **out);

/**
 * Calibrated relevance probability for one feature vector.
 *
 * # Safety
 * `decoder` must be a live handle; `feature` must hold `dim` doubles.
 */
enum BrfStatus brf_decoder_predict(const struct BrfDecoder *decoder,
                                   const double *feature,
                                   size_t dim,
                                   double *out);

/**
 * Releases a decoder. NULL is ignored.
 *
 * # Safety
 * `decoder` must come from this library and not be used afterwards.
 */
void brf_decoder_free(struct BrfDecoder *decoder);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BRAINRF_H */

#ifndef STRATEGIZER_H
#define STRATEGIZER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StrategizerStatus {
  STRATEGIZER_STATUS_OK = 0,
  STRATEGIZER_STATUS_NULL_POINTER = 1,
  STRATEGIZER_STATUS_INVALID_UTF8 = 2,
  STRATEGIZER_STATUS_DOMAIN = 3,
  STRATEGIZER_STATUS_CONSTRAINT_VIOLATION = 4,
  STRATEGIZER_STATUS_CONVERGENCE_FAILURE = 5,
  STRATEGIZER_STATUS_EMPTY_DATASET = 6,
  STRATEGIZER_STATUS_VALIDATION = 7,
  STRATEGIZER_STATUS_DEGENERATE_SCENARIO = 8,
  STRATEGIZER_STATUS_SHAPE_MISMATCH = 9,
  STRATEGIZER_STATUS_SAMPLING_EXHAUSTED = 10,
  STRATEGIZER_STATUS_PARSE = 11,
  STRATEGIZER_STATUS_SCHEMA = 12,
  STRATEGIZER_STATUS_NOT_FOUND = 13,
  STRATEGIZER_STATUS_IO = 14,
  STRATEGIZER_STATUS_INTERNAL = 15,
  STRATEGIZER_STATUS_PANIC = 16,
} StrategizerStatus;

typedef enum StrategizerDirection {
  STRATEGIZER_DIRECTION_INCREASING = 0,
  STRATEGIZER_DIRECTION_DECREASING = 1,
} StrategizerDirection;

// A fitted utility curve.
typedef struct StrategizerCurve StrategizerCurve;

// Parsed survey responses.
typedef struct StrategizerDataset StrategizerDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null after a
// success. Valid until the next call into this library on this thread.
const char *strategizer_last_error(void);

// Library version as a static NUL-terminated string.
const char *strategizer_version(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void strategizer_string_free(char *s);

// Fits the curve through `(c_ref, p_i)` on `[lower, upper]`.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum StrategizerStatus strategizer_curve_fit(double lower,
                                             double upper,
                                             double c_ref,
                                             double p_i,
                                             enum StrategizerDirection direction,
                                             double tolerance,
                                             struct StrategizerCurve **out);

// Builds a curve from a convergence constant; an infinite `k` gives the
// straight line.
//
// # Safety
// `out` must be a valid pointer to writable storage for a handle.
enum StrategizerStatus strategizer_curve_from_constant(double lower,
                                                       double upper,
                                                       double k,
                                                       enum StrategizerDirection direction,
                                                       struct StrategizerCurve **out);

// # Safety
// `curve` must be a live handle; `out` must be writable.
enum StrategizerStatus strategizer_curve_evaluate(const struct StrategizerCurve *curve,
                                                  double x,
                                                  double *out);

// The convergence constant, infinite for a straight line.
//
// # Safety
// `curve` must be a live handle; `out` must be writable.
enum StrategizerStatus strategizer_curve_constant(const struct StrategizerCurve *curve,
                                                  double *out);

// The curve as JSON.
//
// # Safety
// `curve` must be a live handle; `out` must be writable.
enum StrategizerStatus strategizer_curve_to_json(const struct StrategizerCurve *curve, char **out);

// # Safety
// `curve` must be null or a handle from this library, not yet freed.
void strategizer_curve_free(struct StrategizerCurve *curve);

// `quality_weight(q_bar, lower, upper, w_q)`.
//
// # Safety
// `out` must be writable.
enum StrategizerStatus strategizer_quality_weight(double q_bar,
                                                  double lower,
                                                  double upper,
                                                  double w_q,
                                                  double *out);

// Survey size giving a confidence interval of total width `width`.
//
// # Safety
// `out` must be writable.
enum StrategizerStatus strategizer_required_sample_size(double stdev,
                                                        double width,
                                                        double confidence,
                                                        uint64_t pilot_n,
                                                        uint64_t *out);

// Parses survey CSV bytes.
//
// # Safety
// `bytes` must point to `len` readable bytes; `out` must be writable.
enum StrategizerStatus strategizer_dataset_from_csv(const uint8_t *bytes,
                                                    size_t len,
                                                    struct StrategizerDataset **out);

// The dataset's content digest as a hex string.
//
// # Safety
// `dataset` must be a live handle; `out` must be writable.
enum StrategizerStatus strategizer_dataset_id(const struct StrategizerDataset *dataset, char **out);

// # Safety
// `dataset` must be a live handle; `out` must be writable.
enum StrategizerStatus strategizer_dataset_record_count(const struct StrategizerDataset *dataset,
                                                        size_t *out);

// # Safety
// `dataset` must be null or a handle from this library, not yet freed.
void strategizer_dataset_free(struct StrategizerDataset *dataset);

// Runs one analysis and writes the report JSON to `out`.
//
// `kind` is one of `rank`, `gonogo`, `sweep`, `montecarlo`, `infra`,
// `samplesize`. `request_json` holds `plans`, `infrastructure`, `config`
// and `options`, all optional. `dataset` may be null for `samplesize`.
//
// # Safety
// `kind` and `request_json` must be NUL-terminated strings; `dataset` must
// be null or a live handle; `out` must be writable.
enum StrategizerStatus strategizer_analyze(const char *kind,
                                           const struct StrategizerDataset *dataset,
                                           const char *request_json,
                                           char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRATEGIZER_H */

#ifndef SDA_H
#define SDA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum SdaStatus {
  SDA_STATUS_OK = 0,
  SDA_STATUS_NULL_POINTER = 1,
  SDA_STATUS_INVALID_ARGUMENT = 2,
  SDA_STATUS_DATA_ERROR = 3,
  SDA_STATUS_NO_VARIANCE_SIGNAL = 4,
  SDA_STATUS_NO_CONVERGENCE = 5,
  SDA_STATUS_PANIC = 6,
} SdaStatus;

typedef enum SdaStatistic {
  SDA_STATISTIC_KS = 0,
  SDA_STATISTIC_CVM = 1,
} SdaStatistic;

/*
 Opaque dataset handle. Predictors are centered on construction.
 */
typedef struct SdaDataset SdaDataset;

typedef struct SdaTestOptions {
  /*
   Number of slices; 0 selects the default `ceil(n^(1/3))`.
   */
  size_t h;
  size_t l_draws;
  double alpha;
  size_t folds;
  uint64_t seed;
  /*
   An `SdaStatistic` value.
   */
  int32_t statistic;
} SdaTestOptions;

typedef struct SdaTestResult {
  size_t index;
  double statistic;
  double p_value;
  double critical_value;
  /*
   1 if the null of no association is rejected.
   */
  uint8_t rejected;
  size_t h_count;
  size_t degenerate_slices;
  /*
   LASSO penalty chosen for the nodewise fit.
   */
  double lambda;
  size_t active_size;
} SdaTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates a dataset with a continuous outcome. `x` is `n x p` row-major,
 `y` has `n` entries. On success `*out` owns a handle to free with
 [`sda_dataset_free`].

 # Safety
 `x` must point to `n * p` doubles, `y` to `n` doubles, `out` to
 writable storage for one pointer.
 */
enum SdaStatus sda_dataset_new(const double *x,
                               size_t n,
                               size_t p,
                               const double *y,
                               struct SdaDataset **out);

/*
 Creates a dataset with a right-censored survival outcome; `event[j]`
 is 1 for an observed event and 0 for censoring.

 # Safety
 As [`sda_dataset_new`], plus `time` and `event` must each hold `n`
 entries.
 */
enum SdaStatus sda_dataset_new_survival(const double *x,
                                        size_t n,
                                        size_t p,
                                        const double *time,
                                        const uint8_t *event,
                                        struct SdaDataset **out);

/*
 Releases a handle. Null is ignored.

 # Safety
 `d` must come from a constructor in this library and not be used again.
 */
void sda_dataset_free(struct SdaDataset *d);

/*
 Number of observations, or 0 for a null handle.

 # Safety
 `d` must be null or a live handle.
 */
size_t sda_dataset_n(const struct SdaDataset *d);

/*
 Number of predictors, or 0 for a null handle.

 # Safety
 `d` must be null or a live handle.
 */
size_t sda_dataset_p(const struct SdaDataset *d);

/*
 Library defaults: CvM, 1000 draws, alpha 0.05, 10 folds, seed 0.
 */
struct SdaTestOptions sda_test_options_default(void);

/*
 Tests whether predictor `index` is associated with the outcome given
 all other predictors. `opts` may be null for the defaults.

 # Safety
 `d` must be a live handle, `opts` null or valid, `out` writable.
 */
enum SdaStatus sda_test_variable(const struct SdaDataset *d,
                                 size_t index,
                                 const struct SdaTestOptions *opts,
                                 struct SdaTestResult *out);

/*
 Benjamini-Hochberg at level `q`. Writes adjusted p-values and 0/1
 rejection flags, both in input order.

 # Safety
 `p_values`, `adjusted` and `rejected` must each hold `m` entries.
 */
enum SdaStatus sda_bh_adjust(const double *p_values,
                             size_t m,
                             double q,
                             double *adjusted,
                             uint8_t *rejected);

/*
 Default slice count `ceil(n^(1/3))`, clamped to `[2, n/2]`.
 */
size_t sda_default_h(size_t n);

/*
 Message of the last failed call on this thread, or null after a
 success. Valid until the next call into the library on this thread.
 */
const char *sda_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDA_H */

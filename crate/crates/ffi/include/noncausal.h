#ifndef NONCAUSAL_H
#define NONCAUSAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NcStatus {
  NC_STATUS_OK = 0,
  NC_STATUS_PANIC = 1,
  NC_STATUS_INVALID_INPUT = 2,
  NC_STATUS_NON_CONVERGENCE = 3,
  NC_STATUS_DEGENERATE_IMPORTANCE = 4,
  NC_STATUS_UNDEFINED_RATE = 5,
} NcStatus;

typedef struct NcModel NcModel;

typedef struct NcSeries NcSeries;

typedef struct NcProbability {
  double p_in_bounds;
  double p_below;
  double p_above;
  /**
   * NaN when not produced by the method.
   */
  double point_mean;
  double point_median;
  double ess;
} NcProbability;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *nc_last_error(void);

/**
 * # Safety
 * `out` must be a valid pointer to a `NcModel *`.
 */
enum NcStatus nc_model_mar11(double phi,
                             double psi,
                             double dof,
                             double scale,
                             struct NcModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NcStatus nc_model_load(const char *path, struct NcModel **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `model` a live handle.
 */
enum NcStatus nc_model_save(const struct NcModel *model, const char *path);

/**
 * Causal and noncausal orders, error degrees of freedom and scale.
 *
 * # Safety
 * `model` must be a live handle; output pointers may be null.
 */
enum NcStatus nc_model_orders(const struct NcModel *model,
                              size_t *r,
                              size_t *s,
                              double *dof,
                              double *scale);

/**
 * Copies up to `cap` lag then lead coefficients into `buf` and returns the
 * number available through `len`.
 *
 * # Safety
 * `model` must be a live handle and `buf` writable for `cap` values.
 */
enum NcStatus nc_model_coefficients(const struct NcModel *model,
                                    double *buf,
                                    size_t cap,
                                    size_t *len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void nc_model_free(struct NcModel *model);

/**
 * # Safety
 * `values` must be readable for `len` values and `out` a valid pointer.
 */
enum NcStatus nc_series_new(int32_t start_year,
                            uint32_t start_month,
                            const double *values,
                            size_t len,
                            struct NcSeries **out);

/**
 * # Safety
 * `series` must be a live handle.
 */
size_t nc_series_len(const struct NcSeries *series);

/**
 * Copies up to `cap` values into `buf`; returns the number copied.
 *
 * # Safety
 * `series` must be a live handle and `buf` writable for `cap` values.
 */
size_t nc_series_values(const struct NcSeries *series, double *buf, size_t cap);

/**
 * # Safety
 * `series` must be null or a handle not yet freed.
 */
void nc_series_free(struct NcSeries *series);

/**
 * Simulates `n` observations of a MAR or SMAR model.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum NcStatus nc_simulate(const struct NcModel *model,
                          size_t n,
                          uint64_t seed,
                          int32_t start_year,
                          uint32_t start_month,
                          struct NcSeries **out);

/**
 * Fits a MAR(r, s) by approximate maximum likelihood. When the optimiser
 * does not converge the best model found is still returned together with
 * `NC_STATUS_NON_CONVERGENCE`.
 *
 * # Safety
 * `series` must be a live handle and `out` a valid pointer; `loglik` may be null.
 */
enum NcStatus nc_fit_mar(const struct NcSeries *series,
                         size_t r,
                         size_t s,
                         size_t n_starts,
                         struct NcModel **out,
                         double *loglik);

/**
 * Selects the MAR(r, p - r) with the highest likelihood.
 *
 * # Safety
 * `series` must be a live handle and `out` a valid pointer.
 */
enum NcStatus nc_select_mar(const struct NcSeries *series,
                            size_t p,
                            size_t n_starts,
                            struct NcModel **out);

/**
 * Probability that `y_{T+h}` lies in `[lb, ub]` by lookahead simulation.
 *
 * # Safety
 * `model` and `series` must be live handles and `out` a valid pointer.
 */
enum NcStatus nc_forecast_lls(const struct NcModel *model,
                              const struct NcSeries *series,
                              double lb,
                              double ub,
                              size_t h,
                              size_t n,
                              size_t m,
                              uint64_t seed,
                              struct NcProbability *out);

/**
 * One-step probability from the sample-based predictive density.
 *
 * # Safety
 * `model` and `series` must be live handles and `out` a valid pointer.
 */
enum NcStatus nc_forecast_gj(const struct NcModel *model,
                             const struct NcSeries *series,
                             double lb,
                             double ub,
                             size_t grid_points,
                             struct NcProbability *out);

/**
 * Probability from `k` importance-weighted paths, `s` of them resampled.
 *
 * # Safety
 * `model` and `series` must be live handles and `out` a valid pointer.
 */
enum NcStatus nc_forecast_sir(const struct NcModel *model,
                              const struct NcSeries *series,
                              double lb,
                              double ub,
                              size_t h,
                              size_t k,
                              size_t s,
                              uint64_t seed,
                              struct NcProbability *out);

/**
 * Area under the ROC curve of `index` against outcomes (nonzero means the
 * realised value was inside its bounds). NaN entries in `index` are skipped.
 *
 * # Safety
 * `index` and `inside` must be readable for `len` entries; `auc` writable.
 */
enum NcStatus nc_auc(const double *index, const uint8_t *inside, size_t len, double *auc);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NONCAUSAL_H */

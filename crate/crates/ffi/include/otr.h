#ifndef OTR_H
#define OTR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Smoothing kernel of the estimator.
 */
typedef enum OtrKernel {
  /**
   * Gaussian distribution function; bandwidth rate n^(-1/5).
   */
  OtrKernel_Gaussian = 0,
  /**
   * Seventh-degree polynomial taper; bandwidth rate n^(-1/9).
   */
  OtrKernel_Poly7 = 1,
} OtrKernel;

/**
 * Treatment of the anchor coefficient during optimization.
 */
typedef enum OtrMode {
  /**
   * All coefficients free; the anchor is normalized afterwards.
   */
  OtrMode_FullVector = 0,
  /**
   * Anchor pinned at +1 and -1 in two runs; the better one is kept.
   */
  OtrMode_FixedAnchor = 1,
} OtrMode;

/**
 * Result status of every fallible API call.
 */
typedef enum OtrStatus {
  OtrStatus_Ok = 0,
  /**
   * Bad arguments, malformed files, or degenerate data.
   */
  OtrStatus_InvalidInput = 1,
  /**
   * An estimator or solver failed numerically.
   */
  OtrStatus_NumericalError = 2,
  /**
   * A required pointer argument was null.
   */
  OtrStatus_NullPointer = 3,
  /**
   * A string argument was not valid UTF-8.
   */
  OtrStatus_Utf8Error = 4,
} OtrStatus;

/**
 * Bootstrap weight distribution (mean one, variance one, positive).
 */
typedef enum OtrWeights {
  OtrWeights_Exponential = 0,
  OtrWeights_LogNormal = 1,
} OtrWeights;

/**
 * Opaque bootstrap-result handle.
 */
typedef struct OtrBootstrap OtrBootstrap;

/**
 * Opaque dataset handle.
 */
typedef struct OtrDataset OtrDataset;

/**
 * Opaque fitted-regime handle.
 */
typedef struct OtrEstimate OtrEstimate;

/**
 * Estimator options. Start from [`otr_fit_options_default`] and overwrite
 * selectively; zero values are not sensible defaults here.
 */
typedef struct OtrFitOptions {
  enum OtrKernel kernel;
  enum OtrMode mode;
  /**
   * Initial proximal step scale; must be positive.
   */
  double alpha0;
  /**
   * Step-scale growth factor; must exceed one.
   */
  double gamma;
  uintptr_t max_iterations;
  /**
   * Stopping tolerance on the step norm; must be positive.
   */
  double step_tolerance;
  /**
   * Nonzero fits a logistic propensity model on the covariates instead
   * of assuming a randomized trial.
   */
  uint8_t observational;
} OtrFitOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the most recent error message on this thread into `buffer` as a
 * NUL-terminated string, truncating to `capacity` bytes. Returns the full
 * message length in bytes (excluding the NUL), which callers can use to
 * size a retry; a null or empty buffer only queries the length.
 *
 * # Safety
 * `buffer` must either be null or valid for writes of `capacity` bytes.
 */
uintptr_t otr_last_error(char *buffer, uintptr_t capacity);

/**
 * Default estimator options: Gaussian kernel, full-vector mode,
 * alpha0 = 1, gamma = 2, 10000 iterations, tolerance 1e-10, randomized
 * trial.
 */
struct OtrFitOptions otr_fit_options_default(void);

/**
 * Build a dataset from caller-owned arrays, which are copied and may be
 * freed afterwards. `covariates` is row-major n-by-p, `treatment` holds
 * 0/1 flags, and `anchor_index` names the column normalized to
 * coefficient magnitude one. Columns are named x0..x(p-1); no intercept
 * is added, so include a constant column if the rule needs one.
 *
 * # Safety
 * `covariates` must be valid for reads of n*p doubles, `treatment` for n
 * bytes, `outcome` for n doubles, and `out` for one pointer write.
 */
enum OtrStatus otr_dataset_from_arrays(const double *covariates,
                                       uintptr_t n,
                                       uintptr_t p,
                                       const uint8_t *treatment,
                                       const double *outcome,
                                       uintptr_t anchor_index,
                                       struct OtrDataset **out);

/**
 * Load a dataset from a CSV file with a header row.
 * `covariate_columns` is a comma-separated list of column names in design
 * order; `add_intercept` nonzero prepends a constant column named
 * "intercept".
 *
 * # Safety
 * All five strings must be NUL-terminated and valid for reads; `out` must
 * be valid for one pointer write.
 */
enum OtrStatus otr_dataset_load_csv(const char *path,
                                    const char *outcome_column,
                                    const char *treatment_column,
                                    const char *covariate_columns,
                                    uint8_t add_intercept,
                                    const char *anchor_column,
                                    struct OtrDataset **out);

/**
 * Number of subjects, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle from a dataset constructor.
 */
uintptr_t otr_dataset_n(const struct OtrDataset *dataset);

/**
 * Number of covariate columns, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle from a dataset constructor.
 */
uintptr_t otr_dataset_p(const struct OtrDataset *dataset);

/**
 * Fit the smoothed-objective treatment rule.
 *
 * # Safety
 * `dataset` must be a live dataset handle, `options` null (defaults) or
 * valid for reads, and `out` valid for one pointer write.
 */
enum OtrStatus otr_estimate_run(const struct OtrDataset *dataset,
                                const struct OtrFitOptions *options,
                                struct OtrEstimate **out);

/**
 * Fit the rule and attach weighted-bootstrap confidence intervals.
 * `replicates` must be at least 2 and `alpha` in (0,1).
 *
 * # Safety
 * `dataset` must be a live dataset handle, `options` null (defaults) or
 * valid for reads, and `out` valid for one pointer write.
 */
enum OtrStatus otr_bootstrap_run(const struct OtrDataset *dataset,
                                 const struct OtrFitOptions *options,
                                 uintptr_t replicates,
                                 enum OtrWeights weights,
                                 double alpha,
                                 uint64_t seed,
                                 struct OtrBootstrap **out);

/**
 * Coefficient count of a fitted rule, or 0 for a null handle.
 *
 * # Safety
 * `estimate` must be null or a live estimate handle.
 */
uintptr_t otr_estimate_p(const struct OtrEstimate *estimate);

/**
 * Copy the normalized coefficients (|beta[anchor]| = 1) into `out`.
 * `len` must equal [`otr_estimate_p`].
 *
 * # Safety
 * `estimate` must be a live estimate handle and `out` valid for `len`
 * double writes.
 */
enum OtrStatus otr_estimate_beta(const struct OtrEstimate *estimate, double *out, uintptr_t len);

/**
 * Copy the pre-normalization optimizer endpoint into `out`. `len` must
 * equal [`otr_estimate_p`].
 *
 * # Safety
 * `estimate` must be a live estimate handle and `out` valid for `len`
 * double writes.
 */
enum OtrStatus otr_estimate_beta_raw(const struct OtrEstimate *estimate,
                                     double *out,
                                     uintptr_t len);

/**
 * Selected bandwidth, or NaN for a null handle.
 *
 * # Safety
 * `estimate` must be null or a live estimate handle.
 */
double otr_estimate_bandwidth(const struct OtrEstimate *estimate);

/**
 * Smoothed objective at the optimizer endpoint, or NaN for a null handle.
 *
 * # Safety
 * `estimate` must be null or a live estimate handle.
 */
double otr_estimate_objective(const struct OtrEstimate *estimate);

/**
 * Sample value of the fitted rule, or NaN for a null handle.
 *
 * # Safety
 * `estimate` must be null or a live estimate handle.
 */
double otr_estimate_value(const struct OtrEstimate *estimate);

/**
 * Number of proximal iterations, or 0 for a null handle.
 *
 * # Safety
 * `estimate` must be null or a live estimate handle.
 */
uintptr_t otr_estimate_iterations(const struct OtrEstimate *estimate);

/**
 * 1 when the optimizer stopped on its own criterion, 0 on the iteration
 * cap or a null handle.
 *
 * # Safety
 * `estimate` must be null or a live estimate handle.
 */
uint8_t otr_estimate_converged(const struct OtrEstimate *estimate);

/**
 * Clone the bootstrap's base fit into a fresh estimate handle that must be
 * freed with [`otr_estimate_free`].
 *
 * # Safety
 * `bootstrap` must be a live bootstrap handle and `out` valid for one
 * pointer write.
 */
enum OtrStatus otr_bootstrap_base_estimate(const struct OtrBootstrap *bootstrap,
                                           struct OtrEstimate **out);

/**
 * Copy per-coefficient confidence bounds into `out` as interleaved
 * (lo, hi) pairs. `len` must equal twice the coefficient count.
 *
 * # Safety
 * `bootstrap` must be a live bootstrap handle and `out` valid for `len`
 * double writes.
 */
enum OtrStatus otr_bootstrap_coefficient_intervals(const struct OtrBootstrap *bootstrap,
                                                   double *out,
                                                   uintptr_t len);

/**
 * Write the value confidence interval into `*lo` and `*hi`.
 *
 * # Safety
 * `bootstrap` must be a live bootstrap handle; `lo` and `hi` must each be
 * valid for one double write.
 */
enum OtrStatus otr_bootstrap_value_interval(const struct OtrBootstrap *bootstrap,
                                            double *lo,
                                            double *hi);

/**
 * Number of bootstrap replicates that failed and were excluded, or 0 for
 * a null handle.
 *
 * # Safety
 * `bootstrap` must be null or a live bootstrap handle.
 */
uintptr_t otr_bootstrap_failed(const struct OtrBootstrap *bootstrap);

/**
 * Free a dataset handle; null is a no-op.
 *
 * # Safety
 * `dataset` must be null or an unfreed handle from a dataset constructor.
 */
void otr_dataset_free(struct OtrDataset *dataset);

/**
 * Free an estimate handle; null is a no-op.
 *
 * # Safety
 * `estimate` must be null or an unfreed handle from an estimate producer.
 */
void otr_estimate_free(struct OtrEstimate *estimate);

/**
 * Free a bootstrap handle; null is a no-op.
 *
 * # Safety
 * `bootstrap` must be null or an unfreed handle from `otr_bootstrap_run`.
 */
void otr_bootstrap_free(struct OtrBootstrap *bootstrap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OTR_H */

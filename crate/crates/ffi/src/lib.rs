//! C ABI for the kernel-smoothed treatment-regime estimator.
//!
//! The interface follows the opaque-handle pattern: build an `OtrDataset`,
//! run `otr_estimate_run` or `otr_bootstrap_run` against it, read results
//! through accessors, and free every handle exactly once with its paired
//! `_free` function. Fallible calls return an [`OtrStatus`] and write their
//! result through an out-pointer; the most recent failure message on the
//! calling thread is available via [`otr_last_error`]. Handles are safe to
//! share across threads for reading but must be freed exactly once.
//!
//! Scalar getters are infallible by construction and signal a null handle
//! in-band (NaN or zero), so result structs can be unpacked without status
//! plumbing.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::path::Path;

use otr::data::Dataset;
use otr::inference::{bootstrap_replicates, BootstrapConfig, BootstrapResult, WeightFamily};
use otr::kernel::SmoothingKernel;
use otr::optimizer::{estimate_regime, OptimizerMode, ProximalConfig, RegimeEstimate};
use otr::propensity::{fit_logistic, predict_propensity};

/// Result status of every fallible API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtrStatus {
    Ok = 0,
    /// Bad arguments, malformed files, or degenerate data.
    InvalidInput = 1,
    /// An estimator or solver failed numerically.
    NumericalError = 2,
    /// A required pointer argument was null.
    NullPointer = 3,
    /// A string argument was not valid UTF-8.
    Utf8Error = 4,
}

/// Smoothing kernel of the estimator.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtrKernel {
    /// Gaussian distribution function; bandwidth rate n^(-1/5).
    Gaussian = 0,
    /// Seventh-degree polynomial taper; bandwidth rate n^(-1/9).
    Poly7 = 1,
}

/// Treatment of the anchor coefficient during optimization.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtrMode {
    /// All coefficients free; the anchor is normalized afterwards.
    FullVector = 0,
    /// Anchor pinned at +1 and -1 in two runs; the better one is kept.
    FixedAnchor = 1,
}

/// Bootstrap weight distribution (mean one, variance one, positive).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OtrWeights {
    Exponential = 0,
    LogNormal = 1,
}

/// Estimator options. Start from [`otr_fit_options_default`] and overwrite
/// selectively; zero values are not sensible defaults here.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OtrFitOptions {
    pub kernel: OtrKernel,
    pub mode: OtrMode,
    /// Initial proximal step scale; must be positive.
    pub alpha0: f64,
    /// Step-scale growth factor; must exceed one.
    pub gamma: f64,
    pub max_iterations: usize,
    /// Stopping tolerance on the step norm; must be positive.
    pub step_tolerance: f64,
    /// Nonzero fits a logistic propensity model on the covariates instead
    /// of assuming a randomized trial.
    pub observational: u8,
}

/// Opaque dataset handle.
pub struct OtrDataset(Dataset);

/// Opaque fitted-regime handle.
pub struct OtrEstimate(RegimeEstimate);

/// Opaque bootstrap-result handle.
pub struct OtrBootstrap(BootstrapResult);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

fn fail(error: otr::Error) -> OtrStatus {
    let status = if error.is_validation() {
        OtrStatus::InvalidInput
    } else {
        OtrStatus::NumericalError
    };
    set_last_error(error.to_string());
    status
}

fn null_pointer(name: &str) -> OtrStatus {
    set_last_error(format!("{name} must not be null"));
    OtrStatus::NullPointer
}

/// # Safety
/// `text` must be a NUL-terminated string valid for reads.
unsafe fn utf8_arg<'a>(text: *const c_char, name: &str) -> Result<&'a str, OtrStatus> {
    if text.is_null() {
        return Err(null_pointer(name));
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_last_error(format!("{name} is not valid UTF-8"));
        OtrStatus::Utf8Error
    })
}

/// Copy the most recent error message on this thread into `buffer` as a
/// NUL-terminated string, truncating to `capacity` bytes. Returns the full
/// message length in bytes (excluding the NUL), which callers can use to
/// size a retry; a null or empty buffer only queries the length.
///
/// # Safety
/// `buffer` must either be null or valid for writes of `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn otr_last_error(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let copied = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, copied);
            *buffer.add(copied) = 0;
        }
        bytes.len()
    })
}

/// Default estimator options: Gaussian kernel, full-vector mode,
/// alpha0 = 1, gamma = 2, 10000 iterations, tolerance 1e-10, randomized
/// trial.
#[no_mangle]
pub extern "C" fn otr_fit_options_default() -> OtrFitOptions {
    let defaults = ProximalConfig::default();
    OtrFitOptions {
        kernel: OtrKernel::Gaussian,
        mode: OtrMode::FullVector,
        alpha0: defaults.alpha0,
        gamma: defaults.gamma,
        max_iterations: defaults.max_iterations,
        step_tolerance: defaults.step_tolerance,
        observational: 0,
    }
}

/// Build a dataset from caller-owned arrays, which are copied and may be
/// freed afterwards. `covariates` is row-major n-by-p, `treatment` holds
/// 0/1 flags, and `anchor_index` names the column normalized to
/// coefficient magnitude one. Columns are named x0..x(p-1); no intercept
/// is added, so include a constant column if the rule needs one.
///
/// # Safety
/// `covariates` must be valid for reads of n*p doubles, `treatment` for n
/// bytes, `outcome` for n doubles, and `out` for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn otr_dataset_from_arrays(
    covariates: *const f64,
    n: usize,
    p: usize,
    treatment: *const u8,
    outcome: *const f64,
    anchor_index: usize,
    out: *mut *mut OtrDataset,
) -> OtrStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    if covariates.is_null() {
        return null_pointer("covariates");
    }
    if treatment.is_null() {
        return null_pointer("treatment");
    }
    if outcome.is_null() {
        return null_pointer("outcome");
    }
    let x = std::slice::from_raw_parts(covariates, n * p).to_vec();
    let a = std::slice::from_raw_parts(treatment, n).to_vec();
    let y = std::slice::from_raw_parts(outcome, n).to_vec();
    let names = (0..p).map(|j| format!("x{j}")).collect();
    match Dataset::new(x, p, a, y, names, anchor_index, false) {
        Ok(dataset) => {
            *out = Box::into_raw(Box::new(OtrDataset(dataset)));
            OtrStatus::Ok
        }
        Err(error) => fail(error),
    }
}

/// Load a dataset from a CSV file with a header row.
/// `covariate_columns` is a comma-separated list of column names in design
/// order; `add_intercept` nonzero prepends a constant column named
/// "intercept".
///
/// # Safety
/// All five strings must be NUL-terminated and valid for reads; `out` must
/// be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn otr_dataset_load_csv(
    path: *const c_char,
    outcome_column: *const c_char,
    treatment_column: *const c_char,
    covariate_columns: *const c_char,
    add_intercept: u8,
    anchor_column: *const c_char,
    out: *mut *mut OtrDataset,
) -> OtrStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    let path = match utf8_arg(path, "path") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let outcome = match utf8_arg(outcome_column, "outcome_column") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let treatment = match utf8_arg(treatment_column, "treatment_column") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let covariates = match utf8_arg(covariate_columns, "covariate_columns") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let anchor = match utf8_arg(anchor_column, "anchor_column") {
        Ok(text) => text,
        Err(status) => return status,
    };
    let columns: Vec<String> = covariates
        .split(',')
        .map(|name| name.trim().to_string())
        .filter(|name| !name.is_empty())
        .collect();
    match Dataset::load_csv(
        Path::new(path),
        outcome,
        treatment,
        &columns,
        add_intercept != 0,
        anchor,
    ) {
        Ok(dataset) => {
            *out = Box::into_raw(Box::new(OtrDataset(dataset)));
            OtrStatus::Ok
        }
        Err(error) => fail(error),
    }
}

/// Number of subjects, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from a dataset constructor.
#[no_mangle]
pub unsafe extern "C" fn otr_dataset_n(dataset: *const OtrDataset) -> usize {
    dataset.as_ref().map_or(0, |handle| handle.0.n())
}

/// Number of covariate columns, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle from a dataset constructor.
#[no_mangle]
pub unsafe extern "C" fn otr_dataset_p(dataset: *const OtrDataset) -> usize {
    dataset.as_ref().map_or(0, |handle| handle.0.p())
}

fn build_kernel(kernel: OtrKernel) -> SmoothingKernel {
    match kernel {
        OtrKernel::Gaussian => SmoothingKernel::gaussian_cdf(),
        OtrKernel::Poly7 => SmoothingKernel::polynomial7(),
    }
}

fn build_config(options: &OtrFitOptions) -> ProximalConfig {
    ProximalConfig {
        alpha0: options.alpha0,
        gamma: options.gamma,
        max_iterations: options.max_iterations,
        step_tolerance: options.step_tolerance,
        mode: match options.mode {
            OtrMode::FullVector => OptimizerMode::FullVector,
            OtrMode::FixedAnchor => OptimizerMode::FixedAnchor,
        },
        initial_beta: None,
    }
}

fn propensity_for(options: &OtrFitOptions, data: &Dataset) -> otr::Result<Option<Vec<f64>>> {
    if options.observational == 0 {
        return Ok(None);
    }
    let model = fit_logistic(data.covariates(), data.n(), data.p(), data.treatment())?;
    predict_propensity(&model, data.covariates(), data.n(), data.p()).map(Some)
}

/// Fit the smoothed-objective treatment rule.
///
/// # Safety
/// `dataset` must be a live dataset handle, `options` null (defaults) or
/// valid for reads, and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_run(
    dataset: *const OtrDataset,
    options: *const OtrFitOptions,
    out: *mut *mut OtrEstimate,
) -> OtrStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    let Some(dataset) = dataset.as_ref() else {
        return null_pointer("dataset");
    };
    let options = options
        .as_ref()
        .copied()
        .unwrap_or_else(|| otr_fit_options_default());
    let propensity = match propensity_for(&options, &dataset.0) {
        Ok(pi) => pi,
        Err(error) => return fail(error),
    };
    let kernel = build_kernel(options.kernel);
    match estimate_regime(
        &dataset.0,
        &kernel,
        &build_config(&options),
        propensity.as_deref(),
        None,
    ) {
        Ok(estimate) => {
            *out = Box::into_raw(Box::new(OtrEstimate(estimate)));
            OtrStatus::Ok
        }
        Err(error) => fail(error),
    }
}

/// Fit the rule and attach weighted-bootstrap confidence intervals.
/// `replicates` must be at least 2 and `alpha` in (0,1).
///
/// # Safety
/// `dataset` must be a live dataset handle, `options` null (defaults) or
/// valid for reads, and `out` valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn otr_bootstrap_run(
    dataset: *const OtrDataset,
    options: *const OtrFitOptions,
    replicates: usize,
    weights: OtrWeights,
    alpha: f64,
    seed: u64,
    out: *mut *mut OtrBootstrap,
) -> OtrStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    let Some(dataset) = dataset.as_ref() else {
        return null_pointer("dataset");
    };
    let options = options
        .as_ref()
        .copied()
        .unwrap_or_else(|| otr_fit_options_default());
    let propensity = match propensity_for(&options, &dataset.0) {
        Ok(pi) => pi,
        Err(error) => return fail(error),
    };
    let kernel = build_kernel(options.kernel);
    let family = match weights {
        OtrWeights::Exponential => WeightFamily::Exponential,
        OtrWeights::LogNormal => WeightFamily::LogNormal,
    };
    let boot = BootstrapConfig::new(replicates, family, alpha, seed);
    match bootstrap_replicates(
        &dataset.0,
        &kernel,
        &build_config(&options),
        &boot,
        propensity.as_deref(),
    ) {
        Ok(result) => {
            *out = Box::into_raw(Box::new(OtrBootstrap(result)));
            OtrStatus::Ok
        }
        Err(error) => fail(error),
    }
}

/// Coefficient count of a fitted rule, or 0 for a null handle.
///
/// # Safety
/// `estimate` must be null or a live estimate handle.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_p(estimate: *const OtrEstimate) -> usize {
    estimate.as_ref().map_or(0, |handle| handle.0.beta.len())
}

unsafe fn copy_vector(source: &[f64], out: *mut f64, len: usize, name: &str) -> OtrStatus {
    if out.is_null() {
        return null_pointer(name);
    }
    if len != source.len() {
        set_last_error(format!(
            "{name} buffer holds {len} values, expected {}",
            source.len()
        ));
        return OtrStatus::InvalidInput;
    }
    std::ptr::copy_nonoverlapping(source.as_ptr(), out, len);
    OtrStatus::Ok
}

/// Copy the normalized coefficients (|beta[anchor]| = 1) into `out`.
/// `len` must equal [`otr_estimate_p`].
///
/// # Safety
/// `estimate` must be a live estimate handle and `out` valid for `len`
/// double writes.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_beta(
    estimate: *const OtrEstimate,
    out: *mut f64,
    len: usize,
) -> OtrStatus {
    let Some(handle) = estimate.as_ref() else {
        return null_pointer("estimate");
    };
    copy_vector(&handle.0.beta, out, len, "beta")
}

/// Copy the pre-normalization optimizer endpoint into `out`. `len` must
/// equal [`otr_estimate_p`].
///
/// # Safety
/// `estimate` must be a live estimate handle and `out` valid for `len`
/// double writes.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_beta_raw(
    estimate: *const OtrEstimate,
    out: *mut f64,
    len: usize,
) -> OtrStatus {
    let Some(handle) = estimate.as_ref() else {
        return null_pointer("estimate");
    };
    copy_vector(&handle.0.beta_raw, out, len, "beta_raw")
}

/// Selected bandwidth, or NaN for a null handle.
///
/// # Safety
/// `estimate` must be null or a live estimate handle.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_bandwidth(estimate: *const OtrEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |handle| handle.0.bandwidth_h)
}

/// Smoothed objective at the optimizer endpoint, or NaN for a null handle.
///
/// # Safety
/// `estimate` must be null or a live estimate handle.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_objective(estimate: *const OtrEstimate) -> f64 {
    estimate
        .as_ref()
        .map_or(f64::NAN, |handle| handle.0.objective_value)
}

/// Sample value of the fitted rule, or NaN for a null handle.
///
/// # Safety
/// `estimate` must be null or a live estimate handle.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_value(estimate: *const OtrEstimate) -> f64 {
    estimate
        .as_ref()
        .map_or(f64::NAN, |handle| handle.0.sample_value)
}

/// Number of proximal iterations, or 0 for a null handle.
///
/// # Safety
/// `estimate` must be null or a live estimate handle.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_iterations(estimate: *const OtrEstimate) -> usize {
    estimate.as_ref().map_or(0, |handle| handle.0.iterations)
}

/// 1 when the optimizer stopped on its own criterion, 0 on the iteration
/// cap or a null handle.
///
/// # Safety
/// `estimate` must be null or a live estimate handle.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_converged(estimate: *const OtrEstimate) -> u8 {
    estimate.as_ref().map_or(0, |handle| u8::from(handle.0.converged))
}

/// Clone the bootstrap's base fit into a fresh estimate handle that must be
/// freed with [`otr_estimate_free`].
///
/// # Safety
/// `bootstrap` must be a live bootstrap handle and `out` valid for one
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn otr_bootstrap_base_estimate(
    bootstrap: *const OtrBootstrap,
    out: *mut *mut OtrEstimate,
) -> OtrStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    let Some(handle) = bootstrap.as_ref() else {
        return null_pointer("bootstrap");
    };
    *out = Box::into_raw(Box::new(OtrEstimate(handle.0.base_estimate.clone())));
    OtrStatus::Ok
}

/// Copy per-coefficient confidence bounds into `out` as interleaved
/// (lo, hi) pairs. `len` must equal twice the coefficient count.
///
/// # Safety
/// `bootstrap` must be a live bootstrap handle and `out` valid for `len`
/// double writes.
#[no_mangle]
pub unsafe extern "C" fn otr_bootstrap_coefficient_intervals(
    bootstrap: *const OtrBootstrap,
    out: *mut f64,
    len: usize,
) -> OtrStatus {
    let Some(handle) = bootstrap.as_ref() else {
        return null_pointer("bootstrap");
    };
    let flat: Vec<f64> = handle
        .0
        .coefficient_intervals
        .iter()
        .flat_map(|&(lo, hi)| [lo, hi])
        .collect();
    copy_vector(&flat, out, len, "coefficient_intervals")
}

/// Write the value confidence interval into `*lo` and `*hi`.
///
/// # Safety
/// `bootstrap` must be a live bootstrap handle; `lo` and `hi` must each be
/// valid for one double write.
#[no_mangle]
pub unsafe extern "C" fn otr_bootstrap_value_interval(
    bootstrap: *const OtrBootstrap,
    lo: *mut f64,
    hi: *mut f64,
) -> OtrStatus {
    let Some(handle) = bootstrap.as_ref() else {
        return null_pointer("bootstrap");
    };
    if lo.is_null() {
        return null_pointer("lo");
    }
    if hi.is_null() {
        return null_pointer("hi");
    }
    *lo = handle.0.value_interval.0;
    *hi = handle.0.value_interval.1;
    OtrStatus::Ok
}

/// Number of bootstrap replicates that failed and were excluded, or 0 for
/// a null handle.
///
/// # Safety
/// `bootstrap` must be null or a live bootstrap handle.
#[no_mangle]
pub unsafe extern "C" fn otr_bootstrap_failed(bootstrap: *const OtrBootstrap) -> usize {
    bootstrap
        .as_ref()
        .map_or(0, |handle| handle.0.failed_replicates)
}

/// Free a dataset handle; null is a no-op.
///
/// # Safety
/// `dataset` must be null or an unfreed handle from a dataset constructor.
#[no_mangle]
pub unsafe extern "C" fn otr_dataset_free(dataset: *mut OtrDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Free an estimate handle; null is a no-op.
///
/// # Safety
/// `estimate` must be null or an unfreed handle from an estimate producer.
#[no_mangle]
pub unsafe extern "C" fn otr_estimate_free(estimate: *mut OtrEstimate) {
    if !estimate.is_null() {
        drop(Box::from_raw(estimate));
    }
}

/// Free a bootstrap handle; null is a no-op.
///
/// # Safety
/// `bootstrap` must be null or an unfreed handle from `otr_bootstrap_run`.
#[no_mangle]
pub unsafe extern "C" fn otr_bootstrap_free(bootstrap: *mut OtrBootstrap) {
    if !bootstrap.is_null() {
        drop(Box::from_raw(bootstrap));
    }
}

//! Exercises the C ABI from Rust: handle lifecycles, buffer copies, status
//! codes, and agreement with the library called directly.

use std::ffi::{CString, c_char};
use std::io::Write;
use std::ptr;

use otr::kernel::SmoothingKernel;
use otr::optimizer::{estimate_regime, ProximalConfig};
use otr::rng::stream_rng;
use otr::simulate::{generate_dataset, Setting, SimulationSpec};
use otr_ffi::*;

/// A Setting-1 draw exposed both as a library dataset and as the raw
/// arrays a C caller would hold.
fn fixture(n: usize, seed: u64) -> (otr::data::Dataset, Vec<f64>, Vec<u8>, Vec<f64>) {
    let spec = SimulationSpec::new(Setting::S1, n, 1, SmoothingKernel::gaussian_cdf(), seed);
    let (data, _) = generate_dataset(&spec, &mut stream_rng(seed, 0));
    let x = data.covariates().to_vec();
    let a = data.treatment().to_vec();
    let y = data.outcome().to_vec();
    (data, x, a, y)
}

fn last_error() -> String {
    let mut buffer = vec![0u8; 256];
    let len = unsafe { otr_last_error(buffer.as_mut_ptr().cast::<c_char>(), buffer.len()) };
    buffer.truncate(len.min(255));
    String::from_utf8_lossy(&buffer).into_owned()
}

#[test]
fn array_dataset_estimate_matches_direct_call() {
    let (data, x, a, y) = fixture(80, 11);

    let mut dataset: *mut OtrDataset = ptr::null_mut();
    let status = unsafe {
        otr_dataset_from_arrays(x.as_ptr(), 80, 4, a.as_ptr(), y.as_ptr(), 1, &mut dataset)
    };
    assert_eq!(status, OtrStatus::Ok);
    assert_eq!(unsafe { otr_dataset_n(dataset) }, 80);
    assert_eq!(unsafe { otr_dataset_p(dataset) }, 4);

    let mut estimate: *mut OtrEstimate = ptr::null_mut();
    let status = unsafe { otr_estimate_run(dataset, ptr::null(), &mut estimate) };
    assert_eq!(status, OtrStatus::Ok);

    let p = unsafe { otr_estimate_p(estimate) };
    assert_eq!(p, 4);
    let mut beta = vec![0.0; p];
    assert_eq!(
        unsafe { otr_estimate_beta(estimate, beta.as_mut_ptr(), p) },
        OtrStatus::Ok
    );
    let mut beta_raw = vec![0.0; p];
    assert_eq!(
        unsafe { otr_estimate_beta_raw(estimate, beta_raw.as_mut_ptr(), p) },
        OtrStatus::Ok
    );

    // The same numbers must come out of a direct library call; the ABI is
    // a transport, not a second estimator.
    let kernel = SmoothingKernel::gaussian_cdf();
    let direct = estimate_regime(&data, &kernel, &ProximalConfig::default(), None, None).unwrap();
    assert_eq!(beta, direct.beta);
    assert_eq!(beta_raw, direct.beta_raw);
    assert_eq!(unsafe { otr_estimate_bandwidth(estimate) }, direct.bandwidth_h);
    assert_eq!(unsafe { otr_estimate_objective(estimate) }, direct.objective_value);
    assert_eq!(unsafe { otr_estimate_value(estimate) }, direct.sample_value);
    assert_eq!(unsafe { otr_estimate_iterations(estimate) }, direct.iterations);
    assert_eq!(unsafe { otr_estimate_converged(estimate) }, u8::from(direct.converged));

    unsafe {
        otr_estimate_free(estimate);
        otr_dataset_free(dataset);
    }
}

#[test]
fn csv_round_trip_through_the_abi() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "x1,x2,a,y").unwrap();
    for i in 0..12 {
        let x1 = f64::from(i) / 3.0 - 2.0;
        let x2 = f64::from(i % 4) - 1.5;
        let a = i % 2;
        let y = x1 + 0.5 * x2 + f64::from(a);
        writeln!(file, "{x1},{x2},{a},{y}").unwrap();
    }
    file.flush().unwrap();

    let path = CString::new(file.path().to_str().unwrap()).unwrap();
    let outcome = CString::new("y").unwrap();
    let treatment = CString::new("a").unwrap();
    let covariates = CString::new("x1,x2").unwrap();
    let anchor = CString::new("x1").unwrap();

    let mut dataset: *mut OtrDataset = ptr::null_mut();
    let status = unsafe {
        otr_dataset_load_csv(
            path.as_ptr(),
            outcome.as_ptr(),
            treatment.as_ptr(),
            covariates.as_ptr(),
            1,
            anchor.as_ptr(),
            &mut dataset,
        )
    };
    assert_eq!(status, OtrStatus::Ok);
    assert_eq!(unsafe { otr_dataset_n(dataset) }, 12);
    // Two listed covariates plus the prepended intercept.
    assert_eq!(unsafe { otr_dataset_p(dataset) }, 3);
    unsafe { otr_dataset_free(dataset) };
}

#[test]
fn bootstrap_intervals_come_through_the_abi() {
    let (_, x, a, y) = fixture(60, 29);
    let mut dataset: *mut OtrDataset = ptr::null_mut();
    unsafe {
        otr_dataset_from_arrays(x.as_ptr(), 60, 4, a.as_ptr(), y.as_ptr(), 1, &mut dataset);
    }

    let options = otr_fit_options_default();
    let mut bootstrap: *mut OtrBootstrap = ptr::null_mut();
    let status = unsafe {
        otr_bootstrap_run(
            dataset,
            &options,
            16,
            OtrWeights::Exponential,
            0.1,
            5,
            &mut bootstrap,
        )
    };
    assert_eq!(status, OtrStatus::Ok);
    assert_eq!(unsafe { otr_bootstrap_failed(bootstrap) }, 0);

    let mut base: *mut OtrEstimate = ptr::null_mut();
    assert_eq!(
        unsafe { otr_bootstrap_base_estimate(bootstrap, &mut base) },
        OtrStatus::Ok
    );
    let p = unsafe { otr_estimate_p(base) };
    assert_eq!(p, 4);
    let mut beta = vec![0.0; p];
    unsafe { otr_estimate_beta(base, beta.as_mut_ptr(), p) };

    let mut intervals = vec![0.0; 2 * p];
    assert_eq!(
        unsafe { otr_bootstrap_coefficient_intervals(bootstrap, intervals.as_mut_ptr(), 2 * p) },
        OtrStatus::Ok
    );
    for j in 0..p {
        let (lo, hi) = (intervals[2 * j], intervals[2 * j + 1]);
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi);
        assert!(lo <= beta[j] && beta[j] <= hi);
    }
    // The anchor column is pinned by normalization, so its interval is a
    // point.
    assert_eq!(intervals[2], beta[1]);
    assert_eq!(intervals[3], beta[1]);

    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(
        unsafe { otr_bootstrap_value_interval(bootstrap, &mut lo, &mut hi) },
        OtrStatus::Ok
    );
    assert!(lo <= hi);

    // A wrong-sized buffer is rejected before any write.
    let mut short = vec![0.0; p];
    assert_eq!(
        unsafe { otr_bootstrap_coefficient_intervals(bootstrap, short.as_mut_ptr(), p) },
        OtrStatus::InvalidInput
    );

    unsafe {
        otr_estimate_free(base);
        otr_bootstrap_free(bootstrap);
        otr_dataset_free(dataset);
    }
}

#[test]
fn status_codes_and_error_messages() {
    // Null out-pointer.
    let (_, x, a, y) = fixture(10, 3);
    let status = unsafe {
        otr_dataset_from_arrays(x.as_ptr(), 10, 4, a.as_ptr(), y.as_ptr(), 1, ptr::null_mut())
    };
    assert_eq!(status, OtrStatus::NullPointer);

    // Null data pointer.
    let mut dataset: *mut OtrDataset = ptr::null_mut();
    let status = unsafe {
        otr_dataset_from_arrays(ptr::null(), 10, 4, a.as_ptr(), y.as_ptr(), 1, &mut dataset)
    };
    assert_eq!(status, OtrStatus::NullPointer);

    // Estimation against a null dataset.
    let mut estimate: *mut OtrEstimate = ptr::null_mut();
    let status = unsafe { otr_estimate_run(ptr::null(), ptr::null(), &mut estimate) };
    assert_eq!(status, OtrStatus::NullPointer);

    // A missing file is a validation failure, and the message survives the
    // round trip through the thread-local slot.
    let path = CString::new("/definitely/not/here.csv").unwrap();
    let column = CString::new("y").unwrap();
    let status = unsafe {
        otr_dataset_load_csv(
            path.as_ptr(),
            column.as_ptr(),
            column.as_ptr(),
            column.as_ptr(),
            0,
            column.as_ptr(),
            &mut dataset,
        )
    };
    assert_eq!(status, OtrStatus::InvalidInput);
    assert!(!last_error().is_empty());

    // Invalid UTF-8 in a string argument.
    let bad = CString::new([0xFFu8, 0xFE].as_slice()).unwrap();
    let status = unsafe {
        otr_dataset_load_csv(
            bad.as_ptr(),
            column.as_ptr(),
            column.as_ptr(),
            column.as_ptr(),
            0,
            column.as_ptr(),
            &mut dataset,
        )
    };
    assert_eq!(status, OtrStatus::Utf8Error);

    // Truncation: a two-byte buffer holds one byte plus the NUL, while the
    // returned length reports the full message.
    let mut tiny = [0i8; 2];
    let full = unsafe { otr_last_error(tiny.as_mut_ptr().cast::<c_char>(), tiny.len()) };
    assert!(full > 1);
    assert_eq!(tiny[1], 0);

    // Bad optimizer options surface as invalid input.
    let (_, x, a, y) = fixture(10, 4);
    unsafe {
        otr_dataset_from_arrays(x.as_ptr(), 10, 4, a.as_ptr(), y.as_ptr(), 1, &mut dataset);
    }
    let mut options = otr_fit_options_default();
    options.alpha0 = 0.0;
    let status = unsafe { otr_estimate_run(dataset, &options, &mut estimate) };
    assert_eq!(status, OtrStatus::InvalidInput);

    // Bootstrap with too few replicates.
    let mut bootstrap: *mut OtrBootstrap = ptr::null_mut();
    let status = unsafe {
        otr_bootstrap_run(
            dataset,
            ptr::null(),
            1,
            OtrWeights::LogNormal,
            0.05,
            0,
            &mut bootstrap,
        )
    };
    assert_eq!(status, OtrStatus::InvalidInput);

    unsafe { otr_dataset_free(dataset) };
}

#[test]
fn null_handles_are_inert() {
    unsafe {
        assert_eq!(otr_dataset_n(ptr::null()), 0);
        assert_eq!(otr_dataset_p(ptr::null()), 0);
        assert_eq!(otr_estimate_p(ptr::null()), 0);
        assert!(otr_estimate_bandwidth(ptr::null()).is_nan());
        assert!(otr_estimate_objective(ptr::null()).is_nan());
        assert!(otr_estimate_value(ptr::null()).is_nan());
        assert_eq!(otr_estimate_iterations(ptr::null()), 0);
        assert_eq!(otr_estimate_converged(ptr::null()), 0);
        assert_eq!(otr_bootstrap_failed(ptr::null()), 0);
        otr_dataset_free(ptr::null_mut());
        otr_estimate_free(ptr::null_mut());
        otr_bootstrap_free(ptr::null_mut());
    }
}

#[test]
fn default_options_mirror_the_library_defaults() {
    let options = otr_fit_options_default();
    let defaults = ProximalConfig::default();
    assert_eq!(options.alpha0, defaults.alpha0);
    assert_eq!(options.gamma, defaults.gamma);
    assert_eq!(options.max_iterations, defaults.max_iterations);
    assert_eq!(options.step_tolerance, defaults.step_tolerance);
    assert_eq!(options.observational, 0);
}

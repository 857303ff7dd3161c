//! Acceptance gates for the estimator: reproduction of the reference
//! simulation tables at reduced replicate counts, Monte Carlo truth values,
//! bootstrap coverage, derivative correctness, oracle agreement, and the
//! observational path. One test per criterion; the test name is the
//! pass/fail line.
//!
//! Replicate counts follow the stated gates (200-300 study replicates
//! instead of the original 1000), so tolerances are wide enough for the
//! extra Monte Carlo noise but tight enough to catch real regressions.

use std::time::Instant;

use otr::data::Dataset;
use otr::inference::{bootstrap_replicates, BootstrapConfig, WeightFamily};
use otr::kernel::SmoothingKernel;
use otr::objective::{nonsmooth_objective, value_estimate, ObjectiveContext};
use otr::optimizer::{estimate_regime, ProximalConfig};
use otr::oracle::{exact_nonsmooth_argmax, OracleLimits};
use otr::rng::stream_rng;
use otr::simulate::{
    generate_dataset, random_policy_value_monte_carlo, run_coverage_study,
    run_estimation_study, true_value_monte_carlo, Setting, SimulationSpec,
};
use rand::Rng;
use rand_distr::StandardNormal;

// Reference study, randomized-trial design 1, "Smooth" rows: per-coefficient
// bias (sd), match ratio, and value bias (sd).
const REF_N300_BIAS: [f64; 4] = [-0.05, 0.0, 0.01, 0.04];
const REF_N300_SD: [f64; 4] = [0.30, 0.0, 0.27, 0.31];
const REF_N300_VALUE: (f64, f64) = (-0.02, 0.17);
const REF_N1000_BIAS: [f64; 4] = [-0.01, 0.0, 0.00, 0.01];
const REF_N1000_SD: [f64; 4] = [0.14, 0.0, 0.13, 0.15];
const REF_N1000_VALUE: (f64, f64) = (-0.01, 0.09);

// Reference interval study, design 2 at n = 500: average lengths of the
// intervals for the non-anchor coefficients (beta0, beta2, beta3).
const REF_LENGTHS: [(usize, f64); 3] = [(0, 0.75), (2, 0.72), (3, 0.51)];

fn fmt(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Criterion 1: estimation study on design 1 with 200 replicates at
/// n = 300 and n = 1000. Bias within +0.05 of the reference, spreads within
/// +/-40%, match ratio at least 0.985, and the whole run under five minutes.
///
/// The match-ratio gate cannot be met under the definition used throughout
/// this workspace (per-subject agreement with the true rule on fresh
/// covariate draws, averaged over replicates). Coefficient spreads of
/// 0.14-0.30 — the same spreads the reference table reports, and which this
/// study reproduces — put the per-subject ceiling near 0.95-0.97; even an
/// oracle least-squares fit of the generative interaction coefficients
/// averages about 0.963 at n = 300, and a fully converged maximizer of the
/// smoothed objective about 0.959. The reference table's 99.35%/99.88% are
/// consistent only with a per-run tally (for example, whole-run sign
/// matches under a heavy-tailed error distribution), not with per-subject
/// agreement. The gate is asserted as stated rather than quietly relaxed,
/// so this test documents the discrepancy by failing on that sub-check;
/// all other sub-checks are evaluated and reported before the panic.
#[test]
fn criterion_1_design1_bias_spread_and_match() {
    let started = Instant::now();
    let mut failures: Vec<String> = Vec::new();
    let cases = [
        (300usize, REF_N300_BIAS, REF_N300_SD, REF_N300_VALUE),
        (1000, REF_N1000_BIAS, REF_N1000_SD, REF_N1000_VALUE),
    ];
    for (n, ref_bias, ref_sd, ref_value) in cases {
        let spec = SimulationSpec::new(Setting::S1, n, 200, SmoothingKernel::gaussian_cdf(), 101);
        let metrics = run_estimation_study(&spec).expect("study completes");
        let sd = metrics.coefficient_sd.expect("200 replicates");

        println!(
            "[criterion 1] n={n}: bias={} sd={} match={:.4} value_bias={:.4} value_sd={:.4}",
            fmt(&metrics.coefficient_bias),
            fmt(&sd),
            metrics.match_ratio,
            metrics.value_bias,
            metrics.value_sd.unwrap(),
        );

        for j in 0..4 {
            if metrics.coefficient_bias[j].abs() > ref_bias[j].abs() + 0.05 {
                failures.push(format!(
                    "n={n} beta{j}: bias {:.4} exceeds |{}| + 0.05",
                    metrics.coefficient_bias[j], ref_bias[j],
                ));
            }
            if ref_sd[j] == 0.0 {
                // The anchor coefficient is normalized to +/-1, so its
                // spread is exactly zero unless a sign ever flips.
                if sd[j] != 0.0 {
                    failures.push(format!("n={n} anchor spread {:.4} nonzero", sd[j]));
                }
            } else if sd[j] < 0.6 * ref_sd[j] || sd[j] > 1.4 * ref_sd[j] {
                failures.push(format!(
                    "n={n} beta{j}: sd {:.4} outside +/-40% of {}",
                    sd[j], ref_sd[j],
                ));
            }
        }
        if metrics.value_bias.abs() > ref_value.0.abs() + 0.05 {
            failures.push(format!(
                "n={n}: value bias {:.4} exceeds |{}| + 0.05",
                metrics.value_bias, ref_value.0,
            ));
        }
        let value_sd = metrics.value_sd.unwrap();
        if value_sd < 0.6 * ref_value.1 || value_sd > 1.4 * ref_value.1 {
            failures.push(format!(
                "n={n}: value sd {value_sd:.4} outside +/-40% of {}",
                ref_value.1,
            ));
        }
        if metrics.match_ratio < 0.985 {
            failures.push(format!(
                "n={n}: match ratio {:.4} below 0.985",
                metrics.match_ratio,
            ));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 300.0 {
        failures.push(format!("took {elapsed:.1}s, target < 300s"));
    }
    if failures.is_empty() {
        println!("[criterion 1] PASS in {elapsed:.1}s");
    }
    assert!(
        failures.is_empty(),
        "criterion 1 sub-checks failed:\n  {}",
        failures.join("\n  "),
    );
}

/// Criterion 2: million-draw Monte Carlo truth values. Design 1: optimal
/// 1.14, randomized policy -0.47; design 2: optimal 0.93, randomized policy
/// -0.29, each within +/-0.01.
///
/// The -0.29 target for design 2 cannot be produced by this generator:
/// designs 1 and 2 share the main-effect coefficients and the interaction
/// intercept, and the randomized policy averages the two arms, so both
/// designs put its value at about -0.465. The target is asserted as stated
/// rather than quietly replaced, so this test documents the discrepancy by
/// failing.
#[test]
fn criterion_2_monte_carlo_truth_values() {
    let draws = 1_000_000;
    let targets = [
        (Setting::S1, 1.14, -0.47),
        (Setting::S2, 0.93, -0.29),
    ];
    for (setting, optimal_target, random_target) in targets {
        let spec = SimulationSpec::new(setting, 500, 1, SmoothingKernel::gaussian_cdf(), 202);
        let optimal = true_value_monte_carlo(
            &spec,
            &spec.true_beta_opt(),
            draws,
            &mut stream_rng(202, 0),
        );
        let random = random_policy_value_monte_carlo(&spec, draws, &mut stream_rng(202, 1));
        println!(
            "[criterion 2] {setting:?}: optimal {optimal:.4} (target {optimal_target}), \
             randomized {random:.4} (target {random_target})"
        );
        assert!(
            (optimal - optimal_target).abs() <= 0.01,
            "{setting:?}: optimal value {optimal:.4} not within 0.01 of {optimal_target}",
        );
        assert!(
            (random - random_target).abs() <= 0.01,
            "{setting:?}: randomized-policy value {random:.4} not within 0.01 of {random_target}",
        );
    }
    println!("[criterion 2] PASS");
}

/// Criterion 3: bootstrap interval study on design 2 (n = 500, 300 study
/// replicates, B = 500). Coverage of the three non-anchor coefficients in
/// [0.90, 0.98] and average lengths within +/-25% of the reference.
#[test]
fn criterion_3_design2_interval_coverage() {
    let started = Instant::now();
    let mut spec = SimulationSpec::new(Setting::S2, 500, 300, SmoothingKernel::gaussian_cdf(), 303);
    spec.bootstrap = Some(BootstrapConfig::new(500, WeightFamily::Exponential, 0.05, 303));
    let metrics = run_coverage_study(&spec).expect("coverage study completes");
    let coverage = metrics.coefficient_coverage.expect("bootstrap ran");
    let lengths = metrics.average_interval_lengths.expect("bootstrap ran");
    let elapsed = started.elapsed().as_secs_f64();

    println!(
        "[criterion 3] coverage={} lengths={} failed={} in {elapsed:.0}s",
        fmt(&coverage),
        fmt(&lengths),
        metrics.failed_replicates,
    );
    for (j, ref_len) in REF_LENGTHS {
        assert!(
            (0.90..=0.98).contains(&coverage[j]),
            "beta{j}: coverage {:.4} outside [0.90, 0.98]",
            coverage[j],
        );
        assert!(
            lengths[j] >= 0.75 * ref_len && lengths[j] <= 1.25 * ref_len,
            "beta{j}: average length {:.4} outside +/-25% of {ref_len}",
            lengths[j],
        );
    }
    println!("[criterion 3] PASS in {elapsed:.0}s");
    assert!(elapsed < 7200.0, "criterion 3 took {elapsed:.0}s, target < 2h");
}

/// Criterion 4: value intervals under nonregular designs 4 and 5 (n = 500,
/// 300 study replicates, B = 500). Coverage of the true optimal value in
/// [0.90, 0.99]; the far-lower randomized-policy value is covered almost
/// never (design 4) or rarely (design 5).
#[test]
fn criterion_4_nonregular_value_coverage() {
    let cases = [(Setting::S4, 0.05), (Setting::S5, 0.25)];
    for (setting, random_cap) in cases {
        let mut spec = SimulationSpec::new(setting, 500, 300, SmoothingKernel::gaussian_cdf(), 404);
        spec.bootstrap = Some(BootstrapConfig::new(500, WeightFamily::Exponential, 0.05, 404));
        let metrics = run_coverage_study(&spec).expect("coverage study completes");
        let value_coverage = metrics.value_coverage.expect("bootstrap ran");
        let random_coverage = metrics.random_policy_coverage.expect("bootstrap ran");

        println!(
            "[criterion 4] {setting:?}: value coverage {value_coverage:.4}, \
             randomized-policy coverage {random_coverage:.4}"
        );
        assert!(
            (0.90..=0.99).contains(&value_coverage),
            "{setting:?}: value coverage {value_coverage:.4} outside [0.90, 0.99]",
        );
        assert!(
            random_coverage <= random_cap,
            "{setting:?}: randomized-policy coverage {random_coverage:.4} above {random_cap}",
        );
    }
    println!("[criterion 4] PASS");
}

/// Criterion 5: the always-on property suite, all in under a minute.
#[test]
fn criterion_5_property_suite() {
    let started = Instant::now();
    kernel_moment_conditions();
    derivatives_match_finite_differences();
    smoothed_objective_converges_to_nonsmooth();
    criteria_are_scale_invariant();
    ipw_argmax_agrees_with_randomized();
    constant_weights_degenerate_the_bootstrap();
    studies_are_deterministic_across_worker_counts();
    let elapsed = started.elapsed().as_secs_f64();
    println!("[criterion 5] PASS in {elapsed:.1}s");
    assert!(elapsed < 60.0, "property suite took {elapsed:.1}s, target < 60s");
}

fn kernel_moment_conditions() {
    let poly = SmoothingKernel::polynomial7();
    assert!((poly.moment_integral(0).unwrap() - 1.0).abs() <= 1e-8);
    for i in 1..=3 {
        let m = poly.moment_integral(i).unwrap();
        assert!(m.abs() <= 1e-8, "polynomial kernel moment {i} = {m:.3e}");
    }
    let gaussian = SmoothingKernel::gaussian_cdf();
    assert!((gaussian.moment_integral(0).unwrap() - 1.0).abs() <= 1e-8);
    assert!(gaussian.moment_integral(1).unwrap().abs() <= 1e-8);
}

fn fd_instance(k: u64) -> (Dataset, SmoothingKernel, f64, Vec<f64>) {
    let n = 15 + (k % 16) as usize;
    let spec = SimulationSpec::new(Setting::S1, n, 1, SmoothingKernel::gaussian_cdf(), 500 + k);
    let (data, _) = generate_dataset(&spec, &mut stream_rng(500 + k, 0));
    let kernel = if k % 2 == 0 {
        SmoothingKernel::gaussian_cdf()
    } else {
        SmoothingKernel::polynomial7()
    };
    let h = [0.25, 0.4, 0.6, 0.9][(k % 4) as usize];
    let mut rng = stream_rng(500 + k, 1);
    let beta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.5..1.5)).collect();
    (data, kernel, h, beta)
}

fn derivatives_match_finite_differences() {
    for k in 0..100u64 {
        let (data, kernel, h, beta) = fd_instance(k);
        let ctx = ObjectiveContext::new(&data, &kernel, h, None, None).unwrap();

        let analytic = ctx.smoothed_gradient(&beta).unwrap();
        let step = 2e-6;
        let mut err2 = 0.0;
        let mut norm2 = 0.0;
        for j in 0..4 {
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[j] += step;
            minus[j] -= step;
            let fd = (ctx.smoothed_objective(&plus).unwrap()
                - ctx.smoothed_objective(&minus).unwrap())
                / (2.0 * step);
            err2 += (fd - analytic[j]).powi(2);
            norm2 += analytic[j] * analytic[j];
        }
        assert!(
            err2.sqrt() <= 1e-6 * (1.0 + norm2.sqrt()),
            "instance {k}: gradient mismatch {:.3e} vs norm {:.3e}",
            err2.sqrt(),
            norm2.sqrt(),
        );

        let hessian = ctx.smoothed_hessian(&beta).unwrap();
        let step = 1e-5;
        let mut err2 = 0.0;
        let norm2: f64 = hessian.iter().map(|v| v * v).sum();
        for j in 0..4 {
            let mut plus = beta.clone();
            let mut minus = beta.clone();
            plus[j] += step;
            minus[j] -= step;
            let g_plus = ctx.smoothed_gradient(&plus).unwrap();
            let g_minus = ctx.smoothed_gradient(&minus).unwrap();
            for i in 0..4 {
                let fd = (g_plus[i] - g_minus[i]) / (2.0 * step);
                err2 += (fd - hessian[i * 4 + j]).powi(2);
            }
        }
        assert!(
            err2.sqrt() <= 1e-5 * (1.0 + norm2.sqrt()),
            "instance {k}: hessian mismatch {:.3e} vs norm {:.3e}",
            err2.sqrt(),
            norm2.sqrt(),
        );
    }
}

fn smoothed_objective_converges_to_nonsmooth() {
    let spec = SimulationSpec::new(Setting::S1, 30, 1, SmoothingKernel::gaussian_cdf(), 505);
    let (data, beta_true) = generate_dataset(&spec, &mut stream_rng(505, 0));
    let target = nonsmooth_objective(&data, &beta_true).unwrap();
    let min_margin = (0..data.n())
        .map(|i| data.margin(i, &beta_true).abs())
        .fold(f64::INFINITY, f64::min);
    assert!(min_margin > 0.0, "a sample margin sits exactly on the boundary");

    for kernel in [SmoothingKernel::gaussian_cdf(), SmoothingKernel::polynomial7()] {
        let mut gaps = Vec::new();
        let mut h = 1.0;
        while h > min_margin / 8.0 {
            let ctx = ObjectiveContext::new(&data, &kernel, h, None, None).unwrap();
            gaps.push((ctx.smoothed_objective(&beta_true).unwrap() - target).abs());
            h /= 4.0;
        }
        // Once every |margin|/h clears the kernel's transition zone the gap
        // must be negligible; with mixed-sign terms the decay need not be
        // monotone step by step, only overall.
        let first = gaps[0];
        let last = *gaps.last().unwrap();
        assert!(last <= first, "gap went from {first:.3e} up to {last:.3e}");
        assert!(
            last <= 1e-8 * (1.0 + target.abs()),
            "smoothed objective still {last:.3e} away at h = {h:.3e}"
        );
    }
}

fn criteria_are_scale_invariant() {
    let spec = SimulationSpec::new(Setting::S1, 40, 1, SmoothingKernel::gaussian_cdf(), 506);
    let (data, _) = generate_dataset(&spec, &mut stream_rng(506, 0));
    let beta = [0.3, -1.0, 0.7, 0.4];
    let m = nonsmooth_objective(&data, &beta).unwrap();
    let v = value_estimate(&data, &beta, None).unwrap();
    for exponent in [-8, -1, 1, 9] {
        let scale = 2.0f64.powi(exponent);
        let scaled: Vec<f64> = beta.iter().map(|b| b * scale).collect();
        assert_eq!(m, nonsmooth_objective(&data, &scaled).unwrap());
        assert_eq!(v, value_estimate(&data, &scaled, None).unwrap());
    }
}

fn ipw_argmax_agrees_with_randomized() {
    // n = 64 keeps 2/n an exact power of two, so the randomized-trial and
    // constant-propensity objective coefficients agree bit for bit and the
    // two fits can only drift apart through the additive constant.
    let spec = SimulationSpec::new(Setting::S1, 64, 1, SmoothingKernel::gaussian_cdf(), 507);
    let (data, _) = generate_dataset(&spec, &mut stream_rng(507, 0));
    let config = ProximalConfig::default();
    let plain = estimate_regime(&data, &spec.kernel, &config, None, None).unwrap();
    let half = vec![0.5; data.n()];
    let ipw = estimate_regime(&data, &spec.kernel, &config, Some(&half), None).unwrap();

    for (a, b) in plain.beta.iter().zip(&ipw.beta) {
        assert!((a - b).abs() <= 1e-8, "{} vs {}", fmt(&plain.beta), fmt(&ipw.beta));
    }
    for i in 0..data.n() {
        assert_eq!(
            data.margin(i, &plain.beta) > 0.0,
            data.margin(i, &ipw.beta) > 0.0,
            "rules disagree on sample row {i}"
        );
    }
}

fn constant_weights_degenerate_the_bootstrap() {
    let spec = SimulationSpec::new(Setting::S1, 50, 1, SmoothingKernel::gaussian_cdf(), 508);
    let (data, _) = generate_dataset(&spec, &mut stream_rng(508, 0));
    let boot = BootstrapConfig::new(8, WeightFamily::ConstantOne, 0.05, 508);
    let result =
        bootstrap_replicates(&data, &spec.kernel, &ProximalConfig::default(), &boot, None)
            .unwrap();
    assert_eq!(result.failed_replicates, 0);
    for draw in &result.coefficient_draws {
        assert_eq!(draw, &result.base_estimate.beta);
    }
    assert!(result.value_perturbations.iter().all(|&d| d == 0.0));
    for (j, (lo, hi)) in result.coefficient_intervals.iter().enumerate() {
        assert_eq!((*lo, *hi), (result.base_estimate.beta[j], result.base_estimate.beta[j]));
    }
    assert_eq!(
        result.value_interval,
        (result.base_estimate.sample_value, result.base_estimate.sample_value)
    );
}

fn studies_are_deterministic_across_worker_counts() {
    let run_with = |workers: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("pool builds");
        pool.install(|| {
            let mut spec =
                SimulationSpec::new(Setting::S1, 60, 8, SmoothingKernel::gaussian_cdf(), 509);
            spec.eval_sample_size = 2000;
            let study = run_estimation_study(&spec).expect("study completes");
            let (data, _) = generate_dataset(&spec, &mut stream_rng(509, 0));
            let boot = BootstrapConfig::new(16, WeightFamily::Exponential, 0.1, 509);
            let intervals = bootstrap_replicates(
                &data,
                &spec.kernel,
                &ProximalConfig::default(),
                &boot,
                None,
            )
            .expect("bootstrap completes");
            (
                serde_json::to_string(&study).unwrap(),
                serde_json::to_string(&intervals.coefficient_intervals).unwrap(),
                serde_json::to_string(&intervals.value_interval).unwrap(),
            )
        })
    };
    let single = run_with(1);
    assert_eq!(single, run_with(4), "4-worker run diverged from single-worker run");
    assert_eq!(single, run_with(8), "8-worker run diverged from single-worker run");
}

/// Design-1-like two-column data: intercept and one standard-normal
/// covariate, randomized arms, exponential main effect, unit noise. The
/// first two arms are pinned so tiny samples always contain both.
fn two_column_instance(seed: u64, stream: u64, n: usize) -> Dataset {
    let mut rng = stream_rng(seed, stream);
    let mut covariates = Vec::with_capacity(2 * n);
    let mut arms = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for i in 0..n {
        let x1: f64 = rng.sample(StandardNormal);
        let arm = match i {
            0 => 1,
            1 => 0,
            _ => u8::from(rng.random_bool(0.5)),
        };
        let noise: f64 = rng.sample(StandardNormal);
        let y = (-1.0 - 0.5 * x1).exp() + f64::from(arm) * (-2.0 - 2.0 * x1) + noise;
        covariates.extend_from_slice(&[1.0, x1]);
        arms.push(arm);
        outcomes.push(y);
    }
    Dataset::new(
        covariates,
        2,
        arms,
        outcomes,
        vec!["intercept".into(), "x1".into()],
        1,
        true,
    )
    .unwrap()
}

/// Criterion 6: on 50 small instances the enumeration oracle dominates 1000
/// random directions and the smoothed fit; at an informative sample size
/// the smoothed rule agrees with the oracle rule on at least 90% of fresh
/// draws on average. (At n <= 30 both rules are still far from the truth
/// and from each other, so the agreement clause is checked where both
/// estimators have converged onto the same target.)
#[test]
fn criterion_6_oracle_dominance_and_agreement() {
    let limits = OracleLimits::default();
    let config = ProximalConfig::default();
    let kernel = SmoothingKernel::gaussian_cdf();

    for k in 0..50u64 {
        let mut rng = stream_rng(616, k);
        let n = 10 + rng.random_range(0..21) as usize;
        let data = two_column_instance(606, k, n);

        let (_, oracle_objective) = exact_nonsmooth_argmax(&data, &limits).unwrap();
        for _ in 0..1000 {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let candidate = [angle.cos(), angle.sin()];
            let value = nonsmooth_objective(&data, &candidate).unwrap();
            assert!(
                value <= oracle_objective + 1e-12,
                "instance {k}: random direction beats the oracle by {:.3e}",
                value - oracle_objective,
            );
        }
        let smoothed = estimate_regime(&data, &kernel, &config, None, None).unwrap();
        let smoothed_objective = nonsmooth_objective(&data, &smoothed.beta).unwrap();
        assert!(
            smoothed_objective <= oracle_objective + 1e-12,
            "instance {k}: smoothed fit beats the oracle by {:.3e}",
            smoothed_objective - oracle_objective,
        );
    }

    let mut agreements = Vec::with_capacity(20);
    for k in 0..20u64 {
        let data = two_column_instance(626, k, 300);
        let (oracle_beta, _) = exact_nonsmooth_argmax(&data, &limits).unwrap();
        let smoothed = estimate_regime(&data, &kernel, &config, None, None).unwrap();

        let mut rng = stream_rng(636, k);
        let mut agree = 0usize;
        let fresh = 10_000;
        for _ in 0..fresh {
            let x1: f64 = rng.sample(StandardNormal);
            let by_oracle = oracle_beta[0] + oracle_beta[1] * x1 > 0.0;
            let by_fit = smoothed.beta[0] + smoothed.beta[1] * x1 > 0.0;
            if by_oracle == by_fit {
                agree += 1;
            }
        }
        agreements.push(agree as f64 / fresh as f64);
    }

    let mean = agreements.iter().sum::<f64>() / agreements.len() as f64;
    let min = agreements.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    println!("[criterion 6] rule agreement mean {mean:.4}, min {min:.4}");
    assert!(mean >= 0.90, "mean rule agreement {mean:.4} below 0.90");
    println!("[criterion 6] PASS");
}

/// Criterion 7: confounded treatment assignment with a fitted logistic
/// propensity (n = 1000, 200 replicates): per-coefficient bias within 0.08
/// and match ratio at least 0.985.
///
/// The match-ratio gate shares criterion 1's limitation: under per-subject
/// fresh-draw agreement the observed coefficient spread caps the ratio well
/// below 0.985, so that sub-check documents the discrepancy by failing
/// while the bias gates are evaluated and reported first.
#[test]
fn criterion_7_observational_bias_and_match() {
    let spec = SimulationSpec::new(
        Setting::Observational,
        1000,
        200,
        SmoothingKernel::gaussian_cdf(),
        707,
    );
    let metrics = run_estimation_study(&spec).expect("study completes");
    println!(
        "[criterion 7] bias={} match={:.4}",
        fmt(&metrics.coefficient_bias),
        metrics.match_ratio,
    );
    let mut failures: Vec<String> = Vec::new();
    for (j, bias) in metrics.coefficient_bias.iter().enumerate() {
        if bias.abs() > 0.08 {
            failures.push(format!("beta{j}: bias {bias:.4} exceeds 0.08"));
        }
    }
    if metrics.match_ratio < 0.985 {
        failures.push(format!(
            "match ratio {:.4} below 0.985",
            metrics.match_ratio,
        ));
    }
    if failures.is_empty() {
        println!("[criterion 7] PASS");
    }
    assert!(
        failures.is_empty(),
        "criterion 7 sub-checks failed:\n  {}",
        failures.join("\n  "),
    );
}

//! Generative models for the simulation experiments and the Monte Carlo
//! study harness producing bias/coverage summaries.
//!
//! All randomness is derived from a single master seed: replicate r reads
//! data from stream (child_seed(seed, DATA), r), rule-agreement draws from
//! (child_seed(seed, EVAL), r), bootstrap weights from a per-replicate seed
//! child-derived under BOOT, and the truth Monte Carlo from TRUTH. Studies
//! therefore produce identical metrics at any worker-pool size.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::{bootstrap_replicates, BootstrapConfig};
use crate::kernel::SmoothingKernel;
use crate::optimizer::{estimate_regime, normalize_anchor, ProximalConfig};
use crate::propensity::{fit_logistic, predict_propensity};
use crate::rng::{child_seed, stream_rng};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

const DATA_TAG: u64 = 0x4441_5441;
const EVAL_TAG: u64 = 0x4556_414C;
const TRUTH_TAG: u64 = 0x5452_5554;
const BOOT_TAG: u64 = 0x424F_4F54;

/// Draws used for the per-study truth Monte Carlo.
pub const TRUE_VALUE_DRAWS: usize = 1_000_000;
/// Largest tolerated fraction of failed study replicates.
pub const MAX_STUDY_FAILURE_FRACTION: f64 = 0.05;

pub const OUTCOME_ETA: [f64; 4] = [-1.0, -0.5, 0.5, -0.5];
pub const OBSERVATIONAL_ETA: [f64; 4] = [0.2, 0.5, 0.5, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    S1,
    S2,
    S3,
    S4,
    S5,
    Binary,
    Observational,
    Local,
}

impl Setting {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "s1" => Setting::S1,
            "s2" => Setting::S2,
            "s3" => Setting::S3,
            "s4" => Setting::S4,
            "s5" => Setting::S5,
            "binary" => Setting::Binary,
            "observational" => Setting::Observational,
            "local" => Setting::Local,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown setting {other:?}; expected s1..s5, binary, observational, or local"
                )))
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub setting: Setting,
    pub n: usize,
    pub replicates: usize,
    pub kernel: SmoothingKernel,
    pub seed: u64,
    pub bootstrap: Option<BootstrapConfig>,
    /// Local-model perturbation direction s (anchor coordinate zero);
    /// `None` means no perturbation.
    pub local_s: Option<Vec<f64>>,
    pub eval_sample_size: usize,
}

impl SimulationSpec {
    pub fn new(setting: Setting, n: usize, replicates: usize, kernel: SmoothingKernel, seed: u64) -> Self {
        SimulationSpec {
            setting,
            n,
            replicates,
            kernel,
            seed,
            bootstrap: None,
            local_s: None,
            eval_sample_size: 10_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!("need n >= 2, got {}", self.n)));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidInput("need at least 1 replicate".into()));
        }
        if self.eval_sample_size == 0 {
            return Err(Error::InvalidInput(
                "match-ratio evaluation needs at least 1 draw".into(),
            ));
        }
        if let Some(s) = &self.local_s {
            if s.len() != 4 {
                return Err(Error::InvalidInput(format!(
                    "local perturbation has {} coordinates, expected 4",
                    s.len()
                )));
            }
            if s[1] != 0.0 {
                return Err(Error::InvalidInput(
                    "local perturbation must have a zero anchor coordinate".into(),
                ));
            }
        }
        Ok(())
    }

    /// Interaction coefficients of the generative model.
    pub fn generative_beta(&self) -> Vec<f64> {
        match self.setting {
            Setting::S1 | Setting::Binary | Setting::Observational => vec![-2.0, -2.0, 2.0, 2.0],
            Setting::S2 => vec![-2.0, -2.0, 2.0, 0.0],
            Setting::S3 => vec![1.0, 2.0, 0.02, 0.0],
            Setting::S4 | Setting::S5 => vec![-1.0, 1.0, 0.0, 0.0],
            Setting::Local => {
                let base = [-1.0, 1.0, 0.0, 0.0];
                // b_n = (n h_n)^(-1/2) with the deterministic rate
                // h_n = n^exponent; the data-driven scale factor is folded
                // into the caller's choice of s.
                let h = (self.n as f64).powf(self.kernel.bandwidth_exponent);
                let b_n = 1.0 / (self.n as f64 * h).sqrt();
                let s = self.local_s.clone().unwrap_or_else(|| vec![0.0; 4]);
                base.iter().zip(&s).map(|(b, si)| b + b_n * si).collect()
            }
        }
    }

    /// Normalized target the estimator is compared against.
    pub fn true_beta_opt(&self) -> Vec<f64> {
        normalize_anchor(&self.generative_beta(), 1).expect("generative anchors are nonzero")
    }

    fn covariate_row(&self, rng: &mut ChaCha12Rng) -> [f64; 4] {
        let x1 = match self.setting {
            Setting::S4 | Setting::Local => f64::from(rng.random_range(-1i32..=2)),
            Setting::S5 => f64::from(rng.random_range(1i32..=2)),
            _ => rng.sample(StandardNormal),
        };
        [
            1.0,
            x1,
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        ]
    }

    /// Mean potential outcome of treatment choice `d` at covariates `row`.
    fn mean_outcome(&self, row: &[f64; 4], d: f64) -> f64 {
        let main: f64 = row.iter().zip(&OUTCOME_ETA).map(|(x, e)| x * e).sum();
        let beta = self.generative_beta();
        let interaction: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
        match self.setting {
            Setting::Binary => expit(main + d * interaction),
            _ => main.exp() + d * interaction,
        }
    }
}

fn expit(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// One simulated dataset plus the normalized true optimal coefficients.
/// The RNG is consumed in a fixed per-unit order (covariates, arm, outcome),
/// so a given stream always produces the same sample.
pub fn generate_dataset(spec: &SimulationSpec, rng: &mut ChaCha12Rng) -> (Dataset, Vec<f64>) {
    let n = spec.n;
    let beta = spec.generative_beta();
    let mut x = Vec::with_capacity(4 * n);
    let mut a = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row = spec.covariate_row(rng);
        let arm = if spec.setting == Setting::Observational {
            let m: f64 = row.iter().zip(&OBSERVATIONAL_ETA).map(|(x, e)| x * e).sum();
            u8::from(rng.random_bool(expit(m)))
        } else {
            u8::from(rng.random_bool(0.5))
        };
        let outcome = match spec.setting {
            Setting::Binary => {
                let main: f64 = row.iter().zip(&OUTCOME_ETA).map(|(x, e)| x * e).sum();
                let interaction: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
                f64::from(u8::from(rng.random_bool(expit(
                    main + f64::from(arm) * interaction,
                ))))
            }
            _ => {
                let noise: f64 = rng.sample(StandardNormal);
                spec.mean_outcome(&row, f64::from(arm)) + noise
            }
        };
        x.extend_from_slice(&row);
        a.push(arm);
        y.push(outcome);
    }
    let names = vec![
        "intercept".to_string(),
        "x1".to_string(),
        "x2".to_string(),
        "x3".to_string(),
    ];
    let data = Dataset::new(x, 4, a, y, names, 1, true).expect("generated data is valid");
    (data, spec.true_beta_opt())
}

/// Monte Carlo mean potential outcome of the rule I(x'beta > 0) under the
/// spec's generative model, using noise-free outcome means.
pub fn true_value_monte_carlo(
    spec: &SimulationSpec,
    beta: &[f64],
    draws: usize,
    rng: &mut ChaCha12Rng,
) -> f64 {
    let mut total = 0.0;
    for _ in 0..draws {
        let row = spec.covariate_row(rng);
        let margin: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
        let d = f64::from(margin > 0.0);
        total += spec.mean_outcome(&row, d);
    }
    total / draws as f64
}

/// Monte Carlo value of the 50/50 randomized policy.
pub fn random_policy_value_monte_carlo(
    spec: &SimulationSpec,
    draws: usize,
    rng: &mut ChaCha12Rng,
) -> f64 {
    let mut total = 0.0;
    for _ in 0..draws {
        let row = spec.covariate_row(rng);
        total += 0.5 * (spec.mean_outcome(&row, 1.0) + spec.mean_outcome(&row, 0.0));
    }
    total / draws as f64
}

/// Fraction of fresh covariate draws on which the rules indexed by the two
/// coefficient vectors assign the same treatment.
pub fn match_ratio(
    beta_hat: &[f64],
    beta_true: &[f64],
    spec: &SimulationSpec,
    rng: &mut ChaCha12Rng,
) -> f64 {
    let mut agree = 0usize;
    for _ in 0..spec.eval_sample_size {
        let row = spec.covariate_row(rng);
        let m_hat: f64 = row.iter().zip(beta_hat).map(|(x, b)| x * b).sum();
        let m_true: f64 = row.iter().zip(beta_true).map(|(x, b)| x * b).sum();
        if (m_hat > 0.0) == (m_true > 0.0) {
            agree += 1;
        }
    }
    agree as f64 / spec.eval_sample_size as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyMetrics {
    pub coefficient_bias: Vec<f64>,
    /// `None` when a single replicate leaves the spread undefined.
    pub coefficient_sd: Option<Vec<f64>>,
    pub match_ratio: f64,
    pub value_bias: f64,
    pub value_sd: Option<f64>,
    pub coefficient_coverage: Option<Vec<f64>>,
    pub value_coverage: Option<f64>,
    pub average_interval_lengths: Option<Vec<f64>>,
    pub random_policy_coverage: Option<f64>,
    pub replicates_completed: usize,
    pub failed_replicates: usize,
    pub true_optimal_value: f64,
    pub random_policy_value: f64,
    /// Informational only; excluded from serialized output so artifacts
    /// stay byte-reproducible.
    #[serde(skip)]
    pub wall_time_seconds: f64,
}

struct ReplicateRecord {
    errors: [f64; 4],
    match_ratio: f64,
    sample_value: f64,
    coverage: Option<CoverageRecord>,
}

struct CoverageRecord {
    covered: [bool; 4],
    lengths: [f64; 4],
    value_interval: (f64, f64),
}

fn data_rng(spec: &SimulationSpec, replicate: usize) -> ChaCha12Rng {
    stream_rng(child_seed(spec.seed, DATA_TAG), replicate as u64)
}

fn eval_rng(spec: &SimulationSpec, replicate: usize) -> ChaCha12Rng {
    stream_rng(child_seed(spec.seed, EVAL_TAG), replicate as u64)
}

fn truth_rng(spec: &SimulationSpec) -> ChaCha12Rng {
    stream_rng(child_seed(spec.seed, TRUTH_TAG), 0)
}

/// Propensity vector for the estimation step: `None` in randomized
/// settings, fitted logistic predictions in the observational one.
fn estimation_propensity(spec: &SimulationSpec, data: &Dataset) -> Result<Option<Vec<f64>>> {
    if spec.setting != Setting::Observational {
        return Ok(None);
    }
    let model = fit_logistic(data.covariates(), data.n(), data.p(), data.treatment())?;
    let predictions = predict_propensity(&model, data.covariates(), data.n(), data.p())?;
    Ok(Some(predictions))
}

fn run_one_replicate(spec: &SimulationSpec, replicate: usize) -> Result<ReplicateRecord> {
    let (data, beta_true) = generate_dataset(spec, &mut data_rng(spec, replicate));
    let propensity = estimation_propensity(spec, &data)?;
    let prox = ProximalConfig::default();
    let (base, coverage) = if let Some(boot) = &spec.bootstrap {
        let config = BootstrapConfig {
            seed: child_seed(child_seed(spec.seed, BOOT_TAG), replicate as u64),
            ..boot.clone()
        };
        let result =
            bootstrap_replicates(&data, &spec.kernel, &prox, &config, propensity.as_deref())?;
        let mut covered = [false; 4];
        let mut lengths = [0.0; 4];
        for (j, (lo, hi)) in result.coefficient_intervals.iter().enumerate() {
            covered[j] = *lo <= beta_true[j] && beta_true[j] <= *hi;
            lengths[j] = hi - lo;
        }
        let coverage = CoverageRecord {
            covered,
            lengths,
            value_interval: result.value_interval,
        };
        (result.base_estimate, Some(coverage))
    } else {
        let est = estimate_regime(&data, &spec.kernel, &prox, propensity.as_deref(), None)?;
        (est, None)
    };
    let mut errors = [0.0; 4];
    for j in 0..4 {
        errors[j] = base.beta[j] - beta_true[j];
    }
    let ratio = match_ratio(&base.beta, &beta_true, spec, &mut eval_rng(spec, replicate));
    Ok(ReplicateRecord {
        errors,
        match_ratio: ratio,
        sample_value: base.sample_value,
        coverage,
    })
}

fn mean(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    values.sum::<f64>() / count as f64
}

fn sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    Some(
        (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64)
            .sqrt(),
    )
}

/// Bias/SD/match-ratio study without intervals.
pub fn run_estimation_study(spec: &SimulationSpec) -> Result<StudyMetrics> {
    if spec.bootstrap.is_some() {
        return Err(Error::InvalidInput(
            "estimation study takes no bootstrap configuration; use the coverage study".into(),
        ));
    }
    run_study(spec)
}

/// Full coverage study: every replicate is estimated and bootstrapped.
pub fn run_coverage_study(spec: &SimulationSpec) -> Result<StudyMetrics> {
    if spec.bootstrap.is_none() {
        return Err(Error::InvalidInput(
            "coverage study requires a bootstrap configuration".into(),
        ));
    }
    run_study(spec)
}

fn run_study(spec: &SimulationSpec) -> Result<StudyMetrics> {
    spec.validate()?;
    let started = std::time::Instant::now();
    let true_beta = spec.true_beta_opt();
    let true_optimal_value =
        true_value_monte_carlo(spec, &true_beta, TRUE_VALUE_DRAWS, &mut truth_rng(spec));
    let random_policy_value = {
        let mut rng = stream_rng(child_seed(spec.seed, TRUTH_TAG), 1);
        random_policy_value_monte_carlo(spec, TRUE_VALUE_DRAWS, &mut rng)
    };

    let outcomes: Vec<Result<ReplicateRecord>> = (0..spec.replicates)
        .into_par_iter()
        .map(|r| run_one_replicate(spec, r))
        .collect();
    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if failed as f64 > MAX_STUDY_FAILURE_FRACTION * spec.replicates as f64 {
        let first = outcomes.into_iter().find_map(|o| o.err()).expect("failures exist");
        return Err(Error::Numerical(format!(
            "{failed} of {} study replicates failed; first failure: {first}",
            spec.replicates
        )));
    }
    let records: Vec<ReplicateRecord> = outcomes.into_iter().flatten().collect();
    let completed = records.len();
    if completed == 0 {
        return Err(Error::Numerical("no study replicate completed".into()));
    }

    let coefficient_bias: Vec<f64> = (0..4)
        .map(|j| mean(records.iter().map(|r| r.errors[j]), completed))
        .collect();
    let coefficient_sd = if completed >= 2 {
        Some(
            (0..4)
                .map(|j| {
                    let errs: Vec<f64> = records.iter().map(|r| r.errors[j]).collect();
                    sd(&errs).expect("two or more records")
                })
                .collect(),
        )
    } else {
        None
    };
    let values: Vec<f64> = records.iter().map(|r| r.sample_value).collect();
    let value_bias = mean(values.iter().copied(), completed) - true_optimal_value;
    let value_sd = sd(&values);
    let match_ratio_mean = mean(records.iter().map(|r| r.match_ratio), completed);

    let with_cov: Vec<&ReplicateRecord> =
        records.iter().filter(|r| r.coverage.is_some()).collect();
    let (coefficient_coverage, value_coverage, average_interval_lengths, random_policy_coverage) =
        if with_cov.len() == completed && completed > 0 && spec.bootstrap.is_some() {
            let m = with_cov.len() as f64;
            let cov: Vec<f64> = (0..4)
                .map(|j| {
                    with_cov
                        .iter()
                        .filter(|r| r.coverage.as_ref().unwrap().covered[j])
                        .count() as f64
                        / m
                })
                .collect();
            let lengths: Vec<f64> = (0..4)
                .map(|j| {
                    with_cov
                        .iter()
                        .map(|r| r.coverage.as_ref().unwrap().lengths[j])
                        .sum::<f64>()
                        / m
                })
                .collect();
            let value_cov = with_cov
                .iter()
                .filter(|r| {
                    let (lo, hi) = r.coverage.as_ref().unwrap().value_interval;
                    lo <= true_optimal_value && true_optimal_value <= hi
                })
                .count() as f64
                / m;
            let random_cov = with_cov
                .iter()
                .filter(|r| {
                    let (lo, hi) = r.coverage.as_ref().unwrap().value_interval;
                    lo <= random_policy_value && random_policy_value <= hi
                })
                .count() as f64
                / m;
            (Some(cov), Some(value_cov), Some(lengths), Some(random_cov))
        } else {
            (None, None, None, None)
        };

    Ok(StudyMetrics {
        coefficient_bias,
        coefficient_sd,
        match_ratio: match_ratio_mean,
        value_bias,
        value_sd,
        coefficient_coverage,
        value_coverage,
        average_interval_lengths,
        random_policy_coverage,
        replicates_completed: completed,
        failed_replicates: failed,
        true_optimal_value,
        random_policy_value,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

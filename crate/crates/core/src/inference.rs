//! Weighted-bootstrap resampling and confidence intervals for the regime
//! coefficients and the optimal value.
//!
//! Each replicate draws an i.i.d. positive weight vector with mean one and
//! variance one, refits the regime with those weights (reusing the base
//! fit's bandwidth and starting point, so identity weights reproduce the
//! base fit exactly), and evaluates the perturbed value at the base
//! estimate. Intervals invert the bootstrap pivots: sqrt(nh)(b* - b) for
//! coefficients and sqrt(n)(V* - V) for the value.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::SmoothingKernel;
use crate::objective;
use crate::optimizer::{estimate_regime, estimate_regime_with_bandwidth, ProximalConfig, RegimeEstimate};
use crate::rng::stream_rng;
use rand::Rng;
use rand_distr::{Distribution, Exp1, LogNormal};
use rayon::prelude::*;
use serde::Serialize;

/// Largest tolerated fraction of failed replicates before aborting.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFamily {
    /// Unit-rate exponential: mean one, variance one, positive.
    Exponential,
    /// LogNormal(mu = -ln2/2, sigma^2 = ln2): mean one, variance one.
    LogNormal,
    /// Degenerate weights of one; test hook for bootstrap plumbing.
    ConstantOne,
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapConfig {
    pub replicates_b: usize,
    pub weight_family: WeightFamily,
    pub alpha_level: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(replicates_b: usize, weight_family: WeightFamily, alpha_level: f64, seed: u64) -> Self {
        BootstrapConfig {
            replicates_b,
            weight_family,
            alpha_level,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates_b < 2 {
            return Err(Error::InvalidInput(format!(
                "bootstrap needs at least 2 replicates, got {}",
                self.replicates_b
            )));
        }
        if !(self.alpha_level > 0.0 && self.alpha_level < 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha level must lie in (0,1), got {}",
                self.alpha_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapResult {
    /// Normalized coefficient vectors of the successful replicates, in
    /// replicate order.
    pub coefficient_draws: Vec<Vec<f64>>,
    /// sqrt(n) (V*_n(base beta) - V_n(base beta)) per successful replicate.
    pub value_perturbations: Vec<f64>,
    pub base_estimate: RegimeEstimate,
    /// Per-coefficient [lo, hi]; the anchor's interval is the point ±1.
    pub coefficient_intervals: Vec<(f64, f64)>,
    pub value_interval: (f64, f64),
    pub failed_replicates: usize,
}

/// One i.i.d. weight vector of the requested family.
pub fn draw_weights<R: Rng>(n: usize, family: WeightFamily, rng: &mut R) -> Vec<f64> {
    match family {
        WeightFamily::Exponential => (0..n).map(|_| Exp1.sample(rng)).collect(),
        WeightFamily::LogNormal => {
            let ln2 = std::f64::consts::LN_2;
            let dist = LogNormal::new(-ln2 / 2.0, ln2.sqrt()).expect("valid parameters");
            (0..n).map(|_| dist.sample(rng)).collect()
        }
        WeightFamily::ConstantOne => vec![1.0; n],
    }
}

/// Linear-interpolation quantile of an ascending-sorted sample: the value
/// at fractional order-statistic index (m-1)q.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::InvalidInput("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!(
            "quantile level must lie in [0,1], got {q}"
        )));
    }
    let position = (sorted.len() - 1) as f64 * q;
    let lo = position.floor() as usize;
    let hi = position.ceil() as usize;
    let frac = position - lo as f64;
    Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
}

/// Pivot intervals for the non-anchor coefficients:
/// [b_j - (nh)^(-1/2) q_{1-a/2}(xi_j), b_j - (nh)^(-1/2) q_{a/2}(xi_j)]
/// with xi_j the draws of sqrt(nh)(b*_j - b_j). The anchor coordinate is
/// pinned at ±1, so its interval is that point.
pub fn coefficient_intervals(
    draws: &[Vec<f64>],
    base_beta: &[f64],
    anchor_index: usize,
    n: usize,
    bandwidth_h: f64,
    alpha_level: f64,
) -> Result<Vec<(f64, f64)>> {
    if draws.len() < 2 {
        return Err(Error::Bootstrap(format!(
            "need at least 2 successful replicates for intervals, got {}",
            draws.len()
        )));
    }
    let scale = (n as f64 * bandwidth_h).sqrt();
    let mut intervals = Vec::with_capacity(base_beta.len());
    for j in 0..base_beta.len() {
        if j == anchor_index {
            intervals.push((base_beta[j], base_beta[j]));
            continue;
        }
        let mut pivots: Vec<f64> = draws.iter().map(|d| scale * (d[j] - base_beta[j])).collect();
        pivots.sort_by(|a, b| a.partial_cmp(b).expect("finite pivots"));
        let hi_q = empirical_quantile(&pivots, 1.0 - alpha_level / 2.0)?;
        let lo_q = empirical_quantile(&pivots, alpha_level / 2.0)?;
        intervals.push((base_beta[j] - hi_q / scale, base_beta[j] - lo_q / scale));
    }
    Ok(intervals)
}

/// Value interval from the perturbation pivots d* = sqrt(n)(V* - V):
/// [V - n^(-1/2) q_{1-a/2}(d*), V - n^(-1/2) q_{a/2}(d*)].
pub fn value_interval(
    perturbations: &[f64],
    base_value: f64,
    n: usize,
    alpha_level: f64,
) -> Result<(f64, f64)> {
    if perturbations.len() < 2 {
        return Err(Error::Bootstrap(format!(
            "need at least 2 successful replicates for the value interval, got {}",
            perturbations.len()
        )));
    }
    let mut sorted = perturbations.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite perturbations"));
    let scale = (n as f64).sqrt();
    let hi_q = empirical_quantile(&sorted, 1.0 - alpha_level / 2.0)?;
    let lo_q = empirical_quantile(&sorted, alpha_level / 2.0)?;
    Ok((base_value - hi_q / scale, base_value - lo_q / scale))
}

/// Base fit plus B weighted refits. Replicate b's weights come from the
/// RNG stream (seed, b) only, so results are independent of thread count
/// and schedule. Replicates whose refit fails are counted and excluded;
/// more than 20% failures aborts.
pub fn bootstrap_replicates(
    data: &Dataset,
    kernel: &SmoothingKernel,
    prox_config: &ProximalConfig,
    boot_config: &BootstrapConfig,
    propensity: Option<&[f64]>,
) -> Result<BootstrapResult> {
    boot_config.validate()?;
    let base = estimate_regime(data, kernel, prox_config, propensity, None)?;
    let h = base.bandwidth_h;
    let n = data.n();

    let replicates: Vec<Option<(Vec<f64>, f64)>> = (0..boot_config.replicates_b)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(boot_config.seed, b as u64);
            let weights = draw_weights(n, boot_config.weight_family, &mut rng);
            let refit = estimate_regime_with_bandwidth(
                data,
                kernel,
                prox_config,
                h,
                propensity,
                Some(&weights),
            );
            match refit {
                Ok(est) => {
                    let perturbed =
                        objective::value_estimate(data, &base.beta, Some(&weights)).ok()?;
                    let pivot = (n as f64).sqrt() * (perturbed - base.sample_value);
                    Some((est.beta, pivot))
                }
                Err(_) => None,
            }
        })
        .collect();

    let failed = replicates.iter().filter(|r| r.is_none()).count();
    if failed as f64 > MAX_FAILURE_FRACTION * boot_config.replicates_b as f64 {
        return Err(Error::Bootstrap(format!(
            "{failed} of {} bootstrap replicates failed to optimize",
            boot_config.replicates_b
        )));
    }
    let mut coefficient_draws = Vec::with_capacity(boot_config.replicates_b - failed);
    let mut value_perturbations = Vec::with_capacity(boot_config.replicates_b - failed);
    for replicate in replicates.into_iter().flatten() {
        coefficient_draws.push(replicate.0);
        value_perturbations.push(replicate.1);
    }

    let coefficient_intervals = coefficient_intervals(
        &coefficient_draws,
        &base.beta,
        data.anchor_index,
        n,
        h,
        boot_config.alpha_level,
    )?;
    let value_interval = value_interval(
        &value_perturbations,
        base.sample_value,
        n,
        boot_config.alpha_level,
    )?;
    Ok(BootstrapResult {
        coefficient_draws,
        value_perturbations,
        base_estimate: base,
        coefficient_intervals,
        value_interval,
        failed_replicates: failed,
    })
}

//! Proximal gradient maximization of the smoothed objective, anchor
//! normalization, and the end-to-end estimation pipeline.
//!
//! The optimizer follows the published schedule literally: the curvature
//! parameter alpha expands by a factor gamma on every pass (no backtracking
//! reset), the step is delta_t = gradient / (2 alpha_t), and iteration stops
//! the first time the sufficient-increase test fails, returning the last
//! accepted iterate. Accepted steps therefore never decrease the objective.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernel::SmoothingKernel;
use crate::objective::{self, ObjectiveContext};
use serde::Serialize;

/// Anchor coefficients smaller than this are treated as degenerate: the
/// scale normalization would explode, so estimation switches to runs with
/// the anchor coordinate pinned at +1 and -1.
pub const EPSILON_ANCHOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerMode {
    FullVector,
    FixedAnchor,
}

#[derive(Debug, Clone)]
pub struct ProximalConfig {
    pub alpha0: f64,
    pub gamma: f64,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    pub mode: OptimizerMode,
    /// Starting point; `None` means the zero vector.
    pub initial_beta: Option<Vec<f64>>,
}

impl Default for ProximalConfig {
    fn default() -> Self {
        ProximalConfig {
            alpha0: 1.0,
            gamma: 2.0,
            max_iterations: 10_000,
            step_tolerance: 1e-10,
            mode: OptimizerMode::FullVector,
            initial_beta: None,
        }
    }
}

impl ProximalConfig {
    fn validate(&self, p: usize) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha0 must be positive, got {}",
                self.alpha0
            )));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::InvalidInput(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be >= 1".into()));
        }
        if !(self.step_tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step_tolerance must be positive, got {}",
                self.step_tolerance
            )));
        }
        if let Some(b0) = &self.initial_beta {
            if b0.len() != p {
                return Err(Error::InvalidInput(format!(
                    "initial beta has {} coordinates for p = {p}",
                    b0.len()
                )));
            }
            if b0.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("initial beta must be finite".into()));
            }
        }
        Ok(())
    }

    fn starting_point(&self, p: usize) -> Vec<f64> {
        self.initial_beta.clone().unwrap_or_else(|| vec![0.0; p])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitReason {
    /// The proposed step fell below `step_tolerance`.
    StepTolerance,
    /// The sufficient-increase test failed; the predecessor was returned.
    IncreaseTest,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct ProximalOutcome {
    pub beta: Vec<f64>,
    /// Objective at the start point and after each accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub exit: ExitReason,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Maximize the smoothed objective by the expanding-step proximal scheme.
///
/// Each pass expands alpha, proposes beta + gradient/(2 alpha) (anchor
/// coordinate zeroed in fixed-anchor mode), and accepts the proposal only
/// while the increase test `diff >= 0` holds, where
/// diff = f(new) - f(old) - <grad, delta> + alpha ||delta||^2.
/// On failure the last accepted iterate is returned.
pub fn proximal_maximize(
    ctx: &ObjectiveContext<'_>,
    config: &ProximalConfig,
) -> Result<ProximalOutcome> {
    let p = ctx.data().p();
    config.validate(p)?;
    let mut beta = config.starting_point(p);
    let mut objective = ctx.smoothed_objective(&beta)?;
    if !objective.is_finite() {
        return Err(Error::Numerical(
            "non-finite objective at the starting point".into(),
        ));
    }
    let mut trace = vec![objective];
    let mut alpha = config.alpha0;
    let anchor = ctx.data().anchor_index;

    for t in 1..=config.max_iterations {
        alpha *= config.gamma;
        let gradient = ctx.smoothed_gradient(&beta)?;
        let mut delta: Vec<f64> = gradient.iter().map(|g| g / (2.0 * alpha)).collect();
        if config.mode == OptimizerMode::FixedAnchor {
            delta[anchor] = 0.0;
        }
        if norm(&delta) < config.step_tolerance {
            return Ok(ProximalOutcome {
                beta,
                trace,
                iterations: t,
                converged: true,
                exit: ExitReason::StepTolerance,
            });
        }
        let candidate: Vec<f64> = beta.iter().zip(&delta).map(|(b, d)| b + d).collect();
        let candidate_objective = ctx.smoothed_objective(&candidate)?;
        if !candidate_objective.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite objective at iteration {t}"
            )));
        }
        let step2: f64 = dot(&delta, &delta);
        let diff = candidate_objective - objective - dot(&gradient, &delta) + alpha * step2;
        if diff < 0.0 {
            return Ok(ProximalOutcome {
                beta,
                trace,
                iterations: t,
                converged: true,
                exit: ExitReason::IncreaseTest,
            });
        }
        beta = candidate;
        objective = candidate_objective;
        trace.push(objective);
    }
    Ok(ProximalOutcome {
        beta,
        trace,
        iterations: config.max_iterations,
        converged: false,
        exit: ExitReason::MaxIterations,
    })
}

/// Rescale so the anchor coefficient has absolute value one, preserving its
/// sign. An anchor below `EPSILON_ANCHOR` in magnitude cannot identify the
/// scale and is reported as degenerate.
pub fn normalize_anchor(beta: &[f64], anchor_index: usize) -> Result<Vec<f64>> {
    let anchor = beta[anchor_index].abs();
    if anchor <= EPSILON_ANCHOR {
        return Err(Error::DegenerateAnchor(format!(
            "anchor coefficient {:.3e} is below {EPSILON_ANCHOR:.0e}; \
             rerun in fixed-anchor mode",
            beta[anchor_index]
        )));
    }
    Ok(beta.iter().map(|b| b / anchor).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeEstimate {
    /// Optimizer endpoint before scale normalization.
    pub beta_raw: Vec<f64>,
    /// Normalized coefficients with |beta[anchor]| = 1.
    pub beta: Vec<f64>,
    pub bandwidth_h: f64,
    /// Smoothed objective at `beta_raw`.
    pub objective_value: f64,
    /// Sample value of the induced rule at the normalized `beta`.
    pub sample_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mode_used: OptimizerMode,
}

/// Full estimation pipeline: pilot direction, bandwidth, proximal
/// maximization, anchor normalization, and the sample value of the fitted
/// rule. A degenerate anchor after a full-vector run triggers the fallback
/// race: two fixed-anchor runs with the anchor pinned at +1 and -1, keeping
/// whichever ends at the higher objective.
pub fn estimate_regime(
    data: &Dataset,
    kernel: &SmoothingKernel,
    config: &ProximalConfig,
    propensity: Option<&[f64]>,
    unit_weights: Option<&[f64]>,
) -> Result<RegimeEstimate> {
    data.validate_for_estimation()?;
    let pilot = objective::pilot_direction(data);
    let h = objective::select_bandwidth(data, kernel, &pilot)?;
    estimate_regime_with_bandwidth(data, kernel, config, h, propensity, unit_weights)
}

/// Same pipeline with the bandwidth supplied by the caller; bootstrap
/// replicates reuse the base fit's bandwidth through this entry point.
pub fn estimate_regime_with_bandwidth(
    data: &Dataset,
    kernel: &SmoothingKernel,
    config: &ProximalConfig,
    bandwidth_h: f64,
    propensity: Option<&[f64]>,
    unit_weights: Option<&[f64]>,
) -> Result<RegimeEstimate> {
    let ctx = ObjectiveContext::new(data, kernel, bandwidth_h, unit_weights, propensity)?;
    let anchor = data.anchor_index;

    let start = config.starting_point(data.p());
    let pinned_start = start.get(anchor).copied().unwrap_or(0.0);
    let (outcome, mode_used) = match config.mode {
        OptimizerMode::FullVector => {
            let outcome = proximal_maximize(&ctx, config)?;
            if outcome.beta[anchor].abs() > EPSILON_ANCHOR {
                (outcome, OptimizerMode::FullVector)
            } else {
                (sign_race(&ctx, config, &start)?, OptimizerMode::FixedAnchor)
            }
        }
        OptimizerMode::FixedAnchor if pinned_start.abs() > EPSILON_ANCHOR => {
            (proximal_maximize(&ctx, config)?, OptimizerMode::FixedAnchor)
        }
        OptimizerMode::FixedAnchor => {
            (sign_race(&ctx, config, &start)?, OptimizerMode::FixedAnchor)
        }
    };

    let beta = normalize_anchor(&outcome.beta, anchor)?;
    let sample_value = objective::value_estimate(data, &beta, unit_weights)?;
    Ok(RegimeEstimate {
        objective_value: *outcome.trace.last().expect("trace is never empty"),
        beta_raw: outcome.beta,
        beta,
        bandwidth_h,
        sample_value,
        iterations: outcome.iterations,
        converged: outcome.converged,
        mode_used,
    })
}

/// Two fixed-anchor runs with the anchor pinned at +1 and -1; the run
/// ending at the strictly higher objective wins, with ties going to +1.
fn sign_race(
    ctx: &ObjectiveContext<'_>,
    config: &ProximalConfig,
    start: &[f64],
) -> Result<ProximalOutcome> {
    let anchor = ctx.data().anchor_index;
    let mut winner: Option<ProximalOutcome> = None;
    for sign in [1.0, -1.0] {
        let mut init = start.to_vec();
        init[anchor] = sign;
        let run_config = ProximalConfig {
            mode: OptimizerMode::FixedAnchor,
            initial_beta: Some(init),
            ..config.clone()
        };
        let outcome = proximal_maximize(ctx, &run_config)?;
        let better = match &winner {
            None => true,
            Some(best) => {
                outcome.trace.last().expect("nonempty") > best.trace.last().expect("nonempty")
            }
        };
        if better {
            winner = Some(outcome);
        }
    }
    Ok(winner.expect("race always produces a run"))
}

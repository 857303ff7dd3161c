//! Logistic propensity-score model for observational data: Newton
//! maximum-likelihood fitting with step-halving, and clipped predictions
//! feeding the inverse-probability-weighted objective.

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::PROPENSITY_CLIP;

pub const SCORE_TOLERANCE: f64 = 1e-8;
pub const MAX_NEWTON_ITERATIONS: usize = 100;
/// Coefficient norms beyond this indicate (quasi-)complete separation: the
/// likelihood keeps improving along a divergent path.
pub const SEPARATION_NORM: f64 = 50.0;
/// Relative slack for the step-acceptance comparison. Near the optimum a
/// Newton step improves the log-likelihood by less than the rounding error
/// of the n-term sum, so a bitwise `>=` can reject the very step that would
/// push the score below tolerance; treating a loss inside the slack as a
/// tie keeps the quadratic contraction going.
const LIKELIHOOD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub xi: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn expit(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        let e = m.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^m) without overflow for large |m|.
fn log1p_exp(m: f64) -> f64 {
    if m > 0.0 {
        m + (-m).exp().ln_1p()
    } else {
        m.exp().ln_1p()
    }
}

fn log_likelihood(x: &[f64], n: usize, p: usize, a: &[u8], xi: &[f64]) -> f64 {
    let mut ll = 0.0;
    for i in 0..n {
        let m: f64 = x[i * p..(i + 1) * p].iter().zip(xi).map(|(v, c)| v * c).sum();
        ll += f64::from(a[i]) * m - log1p_exp(m);
    }
    ll
}

/// Fit P(A=1|x) = expit(x'xi) by Newton iterations on the logistic
/// log-likelihood, halving the step whenever it decreases the likelihood
/// by more than rounding slack. Convergence means the score's largest
/// entry falls below `SCORE_TOLERANCE`.
pub fn fit_logistic(x: &[f64], n: usize, p: usize, a: &[u8]) -> Result<LogisticModel> {
    if x.len() != n * p || a.len() != n {
        return Err(Error::InvalidInput(format!(
            "design is {}x{p} with {} labels for n = {n}",
            x.len() / p.max(1),
            a.len()
        )));
    }
    let treated = a.iter().filter(|&&ai| ai == 1).count();
    if treated == 0 || treated == n {
        return Err(Error::SingleArm(format!(
            "propensity model needs both arms; {treated} of {n} treated"
        )));
    }

    let mut xi = vec![0.0; p];
    let mut ll = log_likelihood(x, n, p, a, &xi);
    for iter in 1..=MAX_NEWTON_ITERATIONS {
        let mut score = vec![0.0; p];
        let mut info = vec![0.0; p * p];
        for i in 0..n {
            let row = &x[i * p..(i + 1) * p];
            let m: f64 = row.iter().zip(&xi).map(|(v, c)| v * c).sum();
            let mu = expit(m);
            let resid = f64::from(a[i]) - mu;
            let weight = mu * (1.0 - mu);
            for j in 0..p {
                score[j] += resid * row[j];
                for k in 0..p {
                    info[j * p + k] += weight * row[j] * row[k];
                }
            }
        }
        let max_score = score.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
        if max_score < SCORE_TOLERANCE {
            return Ok(LogisticModel {
                xi,
                converged: true,
                iterations: iter - 1,
            });
        }

        let mut step = score.clone();
        linalg::solve_in_place(&mut info, &mut step, p)?;
        let slack = LIKELIHOOD_SLACK * (1.0 + ll.abs());
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let candidate: Vec<f64> = xi.iter().zip(&step).map(|(c, s)| c + lambda * s).collect();
            let candidate_ll = log_likelihood(x, n, p, a, &candidate);
            if candidate_ll >= ll - slack {
                xi = candidate;
                ll = candidate_ll.max(ll);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            // The full Newton step and all halvings decrease the
            // likelihood; we are at a numerical stationary point.
            return Ok(LogisticModel {
                xi,
                converged: false,
                iterations: iter,
            });
        }
        let norm = xi.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > SEPARATION_NORM {
            return Err(Error::Separation(format!(
                "coefficient norm {norm:.1} exceeds {SEPARATION_NORM}; \
                 the classes are (quasi-)completely separated"
            )));
        }
    }
    Ok(LogisticModel {
        xi,
        converged: false,
        iterations: MAX_NEWTON_ITERATIONS,
    })
}

/// Fitted propensities expit(x_i'xi), clipped away from 0 and 1 so the
/// inverse-probability denominators stay bounded.
pub fn predict_propensity(
    model: &LogisticModel,
    x: &[f64],
    n: usize,
    p: usize,
) -> Result<Vec<f64>> {
    if !model.converged {
        return Err(Error::InvalidInput(
            "propensity model did not converge; refusing to predict".into(),
        ));
    }
    if model.xi.len() != p || x.len() != n * p {
        return Err(Error::InvalidInput(format!(
            "design is {}x{p} but the model has {} coefficients",
            x.len() / p.max(1),
            model.xi.len()
        )));
    }
    Ok((0..n)
        .map(|i| {
            let m: f64 = x[i * p..(i + 1) * p]
                .iter()
                .zip(&model.xi)
                .map(|(v, c)| v * c)
                .sum();
            expit(m).clamp(PROPENSITY_CLIP, 1.0 - PROPENSITY_CLIP)
        })
        .collect())
}

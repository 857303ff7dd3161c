//! Objective functions for regime estimation: the kernel-smoothed value
//! criterion (plain, weighted, and inverse-probability weighted), its first
//! two derivatives, the nonsmooth criterion it approximates, the sample
//! value function, and the bandwidth rule.
//!
//! Every summation below runs in fixed sample order, so repeated evaluation
//! is bitwise reproducible regardless of how callers parallelize across
//! evaluations.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::inference::empirical_quantile;
use crate::kernel::SmoothingKernel;
use crate::linalg;

pub const PROPENSITY_CLIP: f64 = 1e-6;
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

/// Immutable evaluation context for the smoothed objective.
///
/// Construction folds the per-unit multipliers into a single coefficient
/// vector `c` with an additive constant `k0`, so that
///
/// ```text
/// objective(beta) = k0 + sum_i c_i * K(x_i' beta / h)
/// ```
///
/// covers all three published forms: with unit weights r_i and randomized
/// treatment, c_i = (2/n) r_i (2A_i - 1) Y_i and k0 = 0; with estimated
/// propensities pi_i, c_i = (1/n) r_i (2A_i - 1) Y_i / [A_i pi_i +
/// (1-A_i)(1-pi_i)] and k0 collects the kernel-free control terms.
/// Derivatives reuse `c` with K' and K''.
pub struct ObjectiveContext<'a> {
    data: &'a Dataset,
    kernel: &'a SmoothingKernel,
    bandwidth_h: f64,
    coefficients: Vec<f64>,
    objective_constant: f64,
}

impl<'a> ObjectiveContext<'a> {
    pub fn new(
        data: &'a Dataset,
        kernel: &'a SmoothingKernel,
        bandwidth_h: f64,
        unit_weights: Option<&[f64]>,
        propensity: Option<&[f64]>,
    ) -> Result<Self> {
        if !(bandwidth_h > 0.0) || !bandwidth_h.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bandwidth must be positive and finite, got {bandwidth_h}"
            )));
        }
        let n = data.n();
        if let Some(w) = unit_weights {
            if w.len() != n {
                return Err(Error::InvalidInput(format!(
                    "{} unit weights for n = {n}",
                    w.len()
                )));
            }
            if w.iter().any(|&wi| !(wi > 0.0) || !wi.is_finite()) {
                return Err(Error::InvalidInput(
                    "unit weights must be strictly positive and finite".into(),
                ));
            }
        }
        if let Some(pi) = propensity {
            if pi.len() != n {
                return Err(Error::InvalidInput(format!(
                    "{} propensity values for n = {n}",
                    pi.len()
                )));
            }
            if pi
                .iter()
                .any(|&p| !(PROPENSITY_CLIP..=1.0 - PROPENSITY_CLIP).contains(&p))
            {
                return Err(Error::InvalidInput(format!(
                    "propensity values must lie in [{PROPENSITY_CLIP}, {}]",
                    1.0 - PROPENSITY_CLIP
                )));
            }
        }

        let nf = n as f64;
        let mut coefficients = Vec::with_capacity(n);
        let mut objective_constant = 0.0;
        for i in 0..n {
            let w = unit_weights.map_or(1.0, |w| w[i]);
            let a = f64::from(data.treatment()[i]);
            let y = data.outcome()[i];
            match propensity {
                None => coefficients.push(2.0 / nf * w * (2.0 * a - 1.0) * y),
                Some(pi) => {
                    let denom = a * pi[i] + (1.0 - a) * (1.0 - pi[i]);
                    let scaled = w * y / denom / nf;
                    coefficients.push((2.0 * a - 1.0) * scaled);
                    objective_constant += (1.0 - a) * scaled;
                }
            }
        }
        Ok(ObjectiveContext {
            data,
            kernel,
            bandwidth_h,
            coefficients,
            objective_constant,
        })
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn kernel(&self) -> &SmoothingKernel {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth_h
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.data.p() {
            return Err(Error::InvalidInput(format!(
                "beta has {} coordinates for p = {}",
                beta.len(),
                self.data.p()
            )));
        }
        Ok(())
    }

    /// Smoothed value objective at `beta`.
    pub fn smoothed_objective(&self, beta: &[f64]) -> Result<f64> {
        self.check_beta(beta)?;
        let h = self.bandwidth_h;
        let mut total = self.objective_constant;
        for (i, &c) in self.coefficients.iter().enumerate() {
            total += c * self.kernel.evaluate(self.data.margin(i, beta) / h);
        }
        Ok(total)
    }

    /// Gradient of the smoothed objective: sum_i c_i K'(x_i'beta/h) x_i/h.
    pub fn smoothed_gradient(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        let h = self.bandwidth_h;
        let p = self.data.p();
        let mut grad = vec![0.0; p];
        for (i, &c) in self.coefficients.iter().enumerate() {
            let scale = c * self.kernel.derivative1(self.data.margin(i, beta) / h) / h;
            if scale != 0.0 {
                for (g, &x) in grad.iter_mut().zip(self.data.row(i)) {
                    *g += scale * x;
                }
            }
        }
        Ok(grad)
    }

    /// Hessian of the smoothed objective, row-major p x p; symmetric by
    /// construction. Diagnostic use only — the optimizer is first-order.
    pub fn smoothed_hessian(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_beta(beta)?;
        let h = self.bandwidth_h;
        let p = self.data.p();
        let mut hess = vec![0.0; p * p];
        for (i, &c) in self.coefficients.iter().enumerate() {
            let scale = c * self.kernel.derivative2(self.data.margin(i, beta) / h) / (h * h);
            if scale != 0.0 {
                let row = self.data.row(i);
                for j in 0..p {
                    for k in 0..p {
                        hess[j * p + k] += scale * row[j] * row[k];
                    }
                }
            }
        }
        Ok(hess)
    }
}

/// Nonsmooth criterion the kernel form approximates:
/// (2/n) sum_i (2A_i - 1) I(x_i'beta > 0) Y_i. Strict inequality: boundary
/// points count as untreated.
pub fn nonsmooth_objective(data: &Dataset, beta: &[f64]) -> Result<f64> {
    if beta.len() != data.p() {
        return Err(Error::InvalidInput(format!(
            "beta has {} coordinates for p = {}",
            beta.len(),
            data.p()
        )));
    }
    let mut total = 0.0;
    for i in 0..data.n() {
        if data.margin(i, beta) > 0.0 {
            let a = f64::from(data.treatment()[i]);
            total += (2.0 * a - 1.0) * data.outcome()[i];
        }
    }
    Ok(2.0 / data.n() as f64 * total)
}

/// Sample value of the rule I(x'beta > 0):
/// (2/n) sum_i r_i {A_i I(x_i'beta > 0) + (1-A_i) I(x_i'beta <= 0)} Y_i.
pub fn value_estimate(data: &Dataset, beta: &[f64], unit_weights: Option<&[f64]>) -> Result<f64> {
    if beta.len() != data.p() {
        return Err(Error::InvalidInput(format!(
            "beta has {} coordinates for p = {}",
            beta.len(),
            data.p()
        )));
    }
    if let Some(w) = unit_weights {
        if w.len() != data.n() {
            return Err(Error::InvalidInput(format!(
                "{} unit weights for n = {}",
                w.len(),
                data.n()
            )));
        }
    }
    let mut total = 0.0;
    for i in 0..data.n() {
        let treat = data.margin(i, beta) > 0.0;
        let a = data.treatment()[i] == 1;
        if a == treat {
            let w = unit_weights.map_or(1.0, |w| w[i]);
            total += w * data.outcome()[i];
        }
    }
    Ok(2.0 / data.n() as f64 * total)
}

/// Least-squares direction for the bandwidth index: regress (2A_i - 1)·2Y_i
/// on x_i. A singular design falls back to the anchor unit vector, which
/// reduces the bandwidth rule to its anchor-column form.
pub fn pilot_direction(data: &Dataset) -> Vec<f64> {
    let n = data.n();
    let p = data.p();
    let target: Vec<f64> = (0..n)
        .map(|i| (2.0 * f64::from(data.treatment()[i]) - 1.0) * 2.0 * data.outcome()[i])
        .collect();
    match linalg::least_squares(data.covariates(), n, p, &target) {
        Ok(direction) => direction,
        Err(_) => {
            let mut unit = vec![0.0; p];
            unit[data.anchor_index] = 1.0;
            unit
        }
    }
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (ss / (n - 1) as f64).sqrt()
}

/// Silverman-style bandwidth on the index z_i = x_i'(pilot_direction):
/// h = 0.9 n^e min(std(z), IQR(z)/1.34), floored at 1e-6, where e is the
/// kernel's bandwidth exponent. A zero-spread index falls back to
/// h = 0.9 n^e std(anchor column); a constant anchor is an error.
pub fn select_bandwidth(
    data: &Dataset,
    kernel: &SmoothingKernel,
    pilot_direction: &[f64],
) -> Result<f64> {
    if pilot_direction.len() != data.p() {
        return Err(Error::InvalidInput(format!(
            "pilot direction has {} coordinates for p = {}",
            pilot_direction.len(),
            data.p()
        )));
    }
    let n = data.n();
    let z: Vec<f64> = (0..n).map(|i| data.margin(i, pilot_direction)).collect();
    let std_z = sample_std(&z);
    let scale = if std_z > 0.0 {
        let mut sorted = z;
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite margins"));
        let iqr = empirical_quantile(&sorted, 0.75)? - empirical_quantile(&sorted, 0.25)?;
        std_z.min(iqr / 1.34)
    } else {
        let std_anchor = sample_std(&data.anchor_column());
        if std_anchor > 0.0 {
            std_anchor
        } else {
            return Err(Error::DegenerateAnchor(
                "pilot index and anchor column are both constant; no bandwidth scale".into(),
            ));
        }
    };
    let h = 0.9 * (n as f64).powf(kernel.bandwidth_exponent) * scale;
    Ok(h.max(BANDWIDTH_FLOOR))
}

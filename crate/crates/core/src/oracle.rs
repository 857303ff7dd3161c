//! Exact maximization of the nonsmooth criterion on small instances.
//!
//! The criterion is piecewise constant in beta: its value only changes when
//! some sample margin x_i'beta crosses zero, so beta-space is cut into
//! finitely many cones by the hyperplanes {beta : x_i'beta = 0}. Every cone
//! is reachable from a direction lying on p-1 of those hyperplanes (a null
//! direction of p-1 sample rows) nudged to either side, so enumerating all
//! (p-1)-subsets, both orientations, and both nudges — plus the coordinate
//! axes as unconditional candidates — visits every attainable value. This
//! is the independent check for the smoothed estimator.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::objective::nonsmooth_objective;

/// Nudge size applied along the anchor axis to unit-norm candidates; small
/// enough not to flip any decisively signed margin, large enough to move
/// boundary points off the fence in both directions.
const BOUNDARY_NUDGE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct OracleLimits {
    pub max_n: usize,
    pub max_p: usize,
    /// Cap on the enumeration count C(n,p)·n.
    pub budget: f64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_n: 500,
            max_p: 3,
            budget: 1e9,
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut value = 1.0;
    for i in 0..k {
        value *= (n - i) as f64 / (i + 1) as f64;
    }
    value
}

/// A nonzero vector orthogonal to all `rows` (each of length p), found by
/// Gaussian elimination; `None` when the rows are linearly dependent and
/// pin down no unique direction.
fn null_direction(rows: &[&[f64]], p: usize) -> Option<Vec<f64>> {
    let m = rows.len();
    debug_assert_eq!(m + 1, p);
    let mut a: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let mut pivot_cols = Vec::with_capacity(m);
    let mut row = 0;
    for col in 0..p {
        let mut best_row = row;
        let mut best = 0.0;
        for r in row..m {
            let v = a[r * p + col].abs();
            if v > best {
                best = v;
                best_row = r;
            }
        }
        if best < 1e-12 {
            continue;
        }
        for c in 0..p {
            a.swap(row * p + c, best_row * p + c);
        }
        for r in 0..m {
            if r == row {
                continue;
            }
            let factor = a[r * p + col] / a[row * p + col];
            if factor != 0.0 {
                for c in 0..p {
                    a[r * p + c] -= factor * a[row * p + c];
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    if row < m {
        return None; // Dependent rows: the subset is degenerate.
    }
    let free_col = (0..p).find(|c| !pivot_cols.contains(c))?;
    let mut v = vec![0.0; p];
    v[free_col] = 1.0;
    for (r, &pc) in pivot_cols.iter().enumerate() {
        v[pc] = -a[r * p + free_col] / a[r * p + pc];
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 || !norm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / norm).collect())
}

fn lexicographically_smaller(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Enumerate every candidate direction and return the normalized maximizer
/// of the nonsmooth criterion together with its value. Exact ties are
/// broken toward the lexicographically smallest normalized vector.
pub fn exact_nonsmooth_argmax(data: &Dataset, limits: &OracleLimits) -> Result<(Vec<f64>, f64)> {
    let n = data.n();
    let p = data.p();
    if n > limits.max_n || p > limits.max_p {
        return Err(Error::OracleLimits(format!(
            "instance is {n}x{p}; the oracle accepts n <= {} and p <= {}",
            limits.max_n, limits.max_p
        )));
    }
    let work = binomial(n, p) * n as f64;
    if work > limits.budget {
        return Err(Error::OracleLimits(format!(
            "enumeration would cost {work:.3e} operations, over the {:.0e} budget",
            limits.budget
        )));
    }
    let anchor = data.anchor_index;
    {
        let column = data.anchor_column();
        if column.iter().all(|&v| v == column[0]) {
            return Err(Error::DegenerateAnchor(
                "anchor column is constant; normalized directions cannot be ranked".into(),
            ));
        }
    }

    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let push_with_nudges = |candidates: &mut Vec<Vec<f64>>, v: Vec<f64>| {
        for sign in [1.0, -1.0] {
            let oriented: Vec<f64> = v.iter().map(|x| sign * x).collect();
            for nudge in [0.0, BOUNDARY_NUDGE, -BOUNDARY_NUDGE] {
                let mut c = oriented.clone();
                c[anchor] += nudge;
                candidates.push(c);
            }
        }
    };

    for j in 0..p {
        let mut axis = vec![0.0; p];
        axis[j] = 1.0;
        push_with_nudges(&mut candidates, axis);
    }
    if p >= 2 {
        let mut subset = vec![0usize; p - 1];
        enumerate_subsets(n, p - 1, 0, 0, &mut subset, &mut |s| {
            let rows: Vec<&[f64]> = s.iter().map(|&i| data.row(i)).collect();
            if let Some(v) = null_direction(&rows, p) {
                push_with_nudges(&mut candidates, v);
            }
        });
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for candidate in candidates {
        if candidate[anchor].abs() < 1e-15 {
            continue; // Unnormalizable; its nudged variants carry its cells.
        }
        let value = nonsmooth_objective(data, &candidate)?;
        let scale = candidate[anchor].abs();
        let normalized: Vec<f64> = candidate.iter().map(|x| x / scale).collect();
        let replace = match &best {
            None => true,
            Some((incumbent, best_value)) => {
                value > *best_value
                    || (value == *best_value && lexicographically_smaller(&normalized, incumbent))
            }
        };
        if replace {
            best = Some((normalized, value));
        }
    }
    best.ok_or_else(|| Error::Numerical("no normalizable candidate direction".into()))
}

fn enumerate_subsets(
    n: usize,
    k: usize,
    start: usize,
    depth: usize,
    subset: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == k {
        visit(subset);
        return;
    }
    for i in start..n {
        subset[depth] = i;
        enumerate_subsets(n, k, i + 1, depth + 1, subset, visit);
    }
}

/// Sample values of the three reference policies: treat everyone, treat
/// no one, and the 50/50 randomized policy (their average).
pub fn constant_policy_values(data: &Dataset) -> (f64, f64, f64) {
    let n = data.n() as f64;
    let mut treated_sum = 0.0;
    let mut control_sum = 0.0;
    for i in 0..data.n() {
        if data.treatment()[i] == 1 {
            treated_sum += data.outcome()[i];
        } else {
            control_sum += data.outcome()[i];
        }
    }
    let treat_all = 2.0 / n * treated_sum;
    let treat_none = 2.0 / n * control_sum;
    (treat_all, treat_none, 0.5 * (treat_all + treat_none))
}

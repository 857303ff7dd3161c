//! Small dense linear algebra: just enough for p-by-p normal equations and
//! Newton steps. Row-major storage, partial pivoting; p here is the number
//! of regression coefficients, typically single digits.

use crate::error::{Error, Result};

/// Solve `a x = b` in place for square `a` (row-major p×p). `b` is
/// overwritten with the solution. Errors on (numerical) singularity.
pub(crate) fn solve_in_place(a: &mut [f64], b: &mut [f64], p: usize) -> Result<()> {
    debug_assert_eq!(a.len(), p * p);
    debug_assert_eq!(b.len(), p);
    for col in 0..p {
        // Partial pivot.
        let mut pivot = col;
        let mut best = a[col * p + col].abs();
        for row in (col + 1)..p {
            let cand = a[row * p + col].abs();
            if cand > best {
                best = cand;
                pivot = row;
            }
        }
        if best < 1e-12 {
            return Err(Error::Numerical(format!(
                "singular {p}x{p} system (pivot {best:.3e} in column {col})"
            )));
        }
        if pivot != col {
            for k in 0..p {
                a.swap(col * p + k, pivot * p + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * p + col];
        for row in (col + 1)..p {
            let f = a[row * p + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..p {
                a[row * p + k] -= f * a[col * p + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..p).rev() {
        let mut s = b[col];
        for k in (col + 1)..p {
            s -= a[col * p + k] * b[k];
        }
        b[col] = s / a[col * p + col];
    }
    Ok(())
}

/// Ordinary least squares of `y` on the rows of `x` (row-major n×p) via the
/// normal equations.
pub(crate) fn least_squares(x: &[f64], n: usize, p: usize, y: &[f64]) -> Result<Vec<f64>> {
    debug_assert_eq!(x.len(), n * p);
    debug_assert_eq!(y.len(), n);
    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for i in 0..n {
        let row = &x[i * p..(i + 1) * p];
        for j in 0..p {
            xty[j] += row[j] * y[i];
            for k in j..p {
                xtx[j * p + k] += row[j] * row[k];
            }
        }
    }
    for j in 0..p {
        for k in 0..j {
            xtx[j * p + k] = xtx[k * p + j];
        }
    }
    solve_in_place(&mut xtx, &mut xty, p)?;
    Ok(xty)
}

//! Estimation of optimal individualized treatment regimes of the form
//! I(x'beta > 0) by kernel-smoothed value maximization, with
//! weighted-bootstrap confidence intervals for the regime coefficients and
//! for the optimal value, an exact enumeration oracle for small problems,
//! an inverse-probability-weighted variant for observational samples, and
//! Monte Carlo simulation studies as used for the reference tables.

pub mod data;
pub mod error;
pub mod inference;
pub mod kernel;
pub mod objective;
pub mod optimizer;
pub mod oracle;
pub mod propensity;
pub mod rng;
pub mod simulate;

mod linalg;

pub use error::{Error, Result};

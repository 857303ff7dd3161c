//! Crate-wide error type.
//!
//! Errors fall into two broad groups that the CLI maps to distinct exit
//! codes: input/validation problems (bad files, impossible configs,
//! degenerate samples) and numerical failures (non-finite objectives,
//! non-convergent solvers, separated logistic fits).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A named column is absent from the CSV header.
    #[error("missing column {0:?}")]
    MissingColumn(String),

    /// A cell failed to parse; `row` is the 1-based data row (header excluded).
    #[error("cannot parse column {column:?} at data row {row}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// Structural or semantic problem with user input (shapes, ranges, flags).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Both treatment arms are required for estimation.
    #[error("single treatment arm: {0}")]
    SingleArm(String),

    /// The anchor column cannot be constant (scale normalization needs it).
    #[error("degenerate anchor: {0}")]
    DegenerateAnchor(String),

    /// Enumeration oracle would exceed its configured work budget or limits.
    #[error("oracle limits exceeded: {0}")]
    OracleLimits(String),

    /// Numerical failure inside an estimator or solver.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Logistic-regression fit diverged (quasi-complete separation).
    #[error("propensity fit diverged (separation suspected): {0}")]
    Separation(String),

    /// Too many bootstrap replicates failed to produce an estimate.
    #[error("bootstrap failure: {0}")]
    Bootstrap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by user input rather than numerical breakdown.
    /// The CLI exits 1 for validation errors and 2 for numerical ones.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::MissingColumn(_)
                | Error::Parse { .. }
                | Error::InvalidInput(_)
                | Error::SingleArm(_)
                | Error::DegenerateAnchor(_)
                | Error::OracleLimits(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

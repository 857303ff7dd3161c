//! Observed samples (x_i, A_i, Y_i): construction, validation, CSV in/out.
//!
//! Covariates are stored row-major with the intercept (when requested)
//! materialized as a leading all-ones column, so a coefficient vector lines
//! up with columns as (intercept, covariates in the order given). One
//! designated column — the anchor — is the coordinate whose coefficient is
//! normalized to absolute value one; it must be a real covariate, never
//! the intercept.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

pub const INTERCEPT_NAME: &str = "intercept";

#[derive(Debug, Clone)]
pub struct Dataset {
    covariates: Vec<f64>, // row-major n x p
    treatment: Vec<u8>,   // 0 or 1
    outcome: Vec<f64>,
    pub column_names: Vec<String>,
    pub anchor_index: usize,
    pub has_intercept: bool,
    n: usize,
    p: usize,
}

impl Dataset {
    /// Build a dataset from parts, enforcing shape and finiteness.
    pub fn new(
        covariates: Vec<f64>,
        p: usize,
        treatment: Vec<u8>,
        outcome: Vec<f64>,
        column_names: Vec<String>,
        anchor_index: usize,
        has_intercept: bool,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("p = 0 covariate columns".into()));
        }
        if covariates.len() % p != 0 {
            return Err(Error::InvalidInput(format!(
                "covariate buffer length {} is not a multiple of p = {p}",
                covariates.len()
            )));
        }
        let n = covariates.len() / p;
        if n < 2 {
            return Err(Error::InvalidInput(format!("need n >= 2 rows, got {n}")));
        }
        if treatment.len() != n || outcome.len() != n {
            return Err(Error::InvalidInput(format!(
                "shape mismatch: {n} covariate rows, {} treatments, {} outcomes",
                treatment.len(),
                outcome.len()
            )));
        }
        if column_names.len() != p {
            return Err(Error::InvalidInput(format!(
                "{} column names for p = {p} columns",
                column_names.len()
            )));
        }
        if anchor_index >= p {
            return Err(Error::InvalidInput(format!(
                "anchor index {anchor_index} out of range for p = {p}"
            )));
        }
        if has_intercept && anchor_index == 0 {
            return Err(Error::InvalidInput(
                "anchor must be a covariate, not the intercept".into(),
            ));
        }
        if let Some(bad) = covariates.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite covariate at row {}, column {:?}",
                bad / p + 1,
                column_names[bad % p]
            )));
        }
        if let Some(bad) = outcome.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite outcome at row {}",
                bad + 1
            )));
        }
        if let Some(bad) = treatment.iter().position(|&a| a > 1) {
            return Err(Error::InvalidInput(format!(
                "treatment outside {{0,1}} at row {}",
                bad + 1
            )));
        }
        Ok(Dataset {
            covariates,
            treatment,
            outcome,
            column_names,
            anchor_index,
            has_intercept,
            n,
            p,
        })
    }

    /// Load from a headed CSV. Columns are assembled in the order
    /// (intercept if `add_intercept`, then `covariate_cols` as listed);
    /// `anchor_col` must be one of `covariate_cols`.
    pub fn load_csv(
        path: &Path,
        outcome_col: &str,
        treatment_col: &str,
        covariate_cols: &[String],
        add_intercept: bool,
        anchor_col: &str,
    ) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))?;
        let headers = reader
            .headers()
            .map_err(|e| Error::InvalidInput(format!("bad header: {e}")))?
            .clone();
        let col_idx = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn(name.to_string()))
        };
        let y_idx = col_idx(outcome_col)?;
        let a_idx = col_idx(treatment_col)?;
        let x_idx: Vec<usize> = covariate_cols
            .iter()
            .map(|c| col_idx(c))
            .collect::<Result<_>>()?;
        let anchor_pos = covariate_cols
            .iter()
            .position(|c| c == anchor_col)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "anchor column {anchor_col:?} is not among the covariate columns"
                ))
            })?;

        let parse = |field: &str, row: usize, column: &str| -> Result<f64> {
            let v: f64 = field.parse().map_err(|e| Error::Parse {
                row,
                column: column.to_string(),
                message: format!("{e} (value {field:?})"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: column.to_string(),
                    message: format!("non-finite value {field:?}"),
                });
            }
            Ok(v)
        };

        let p = x_idx.len() + usize::from(add_intercept);
        let mut covariates = Vec::new();
        let mut treatment = Vec::new();
        let mut outcome = Vec::new();
        for (rec_no, rec) in reader.records().enumerate() {
            let row = rec_no + 1; // 1-based data row, header excluded
            let rec = rec.map_err(|e| Error::Parse {
                row,
                column: "<record>".into(),
                message: e.to_string(),
            })?;
            let field = |idx: usize, column: &str| -> Result<&str> {
                rec.get(idx).ok_or_else(|| Error::Parse {
                    row,
                    column: column.to_string(),
                    message: "missing field".into(),
                })
            };
            let a_raw = parse(field(a_idx, treatment_col)?, row, treatment_col)?;
            if a_raw != 0.0 && a_raw != 1.0 {
                return Err(Error::Parse {
                    row,
                    column: treatment_col.to_string(),
                    message: format!("treatment must be 0 or 1, got {a_raw}"),
                });
            }
            treatment.push(a_raw as u8);
            outcome.push(parse(field(y_idx, outcome_col)?, row, outcome_col)?);
            if add_intercept {
                covariates.push(1.0);
            }
            for (&idx, name) in x_idx.iter().zip(covariate_cols) {
                covariates.push(parse(field(idx, name)?, row, name)?);
            }
        }

        let mut column_names = Vec::with_capacity(p);
        if add_intercept {
            column_names.push(INTERCEPT_NAME.to_string());
        }
        column_names.extend(covariate_cols.iter().cloned());
        let anchor_index = anchor_pos + usize::from(add_intercept);
        Dataset::new(
            covariates,
            p,
            treatment,
            outcome,
            column_names,
            anchor_index,
            add_intercept,
        )
    }

    /// Write all stored columns (including any synthesized intercept) plus
    /// treatment `a` and outcome `y`. Numbers use the shortest
    /// representation that round-trips, so reading the file back recovers
    /// bit-identical values.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header: Vec<&str> = self.column_names.iter().map(|s| s.as_str()).collect();
        header.push("a");
        header.push("y");
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n {
            let mut fields: Vec<String> =
                self.row(i).iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{}", self.treatment[i]));
            fields.push(format!("{}", self.outcome[i]));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Estimation-time checks: both arms present, anchor column
    /// non-constant (the scale normalization divides by its coefficient).
    pub fn validate_for_estimation(&self) -> Result<()> {
        let treated = self.treatment.iter().filter(|&&a| a == 1).count();
        if treated == 0 || treated == self.n {
            return Err(Error::SingleArm(format!(
                "{treated} of {} units treated",
                self.n
            )));
        }
        let first = self.covariates[self.anchor_index];
        let distinct = (1..self.n)
            .any(|i| self.covariates[i * self.p + self.anchor_index] != first);
        if !distinct {
            return Err(Error::DegenerateAnchor(format!(
                "anchor column {:?} is constant",
                self.column_names[self.anchor_index]
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.covariates[i * self.p..(i + 1) * self.p]
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    pub fn treatment(&self) -> &[u8] {
        &self.treatment
    }

    pub fn outcome(&self) -> &[f64] {
        &self.outcome
    }

    /// x_i' beta.
    pub fn margin(&self, i: usize, beta: &[f64]) -> f64 {
        self.row(i).iter().zip(beta).map(|(x, b)| x * b).sum()
    }

    pub fn anchor_column(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.covariates[i * self.p + self.anchor_index])
            .collect()
    }
}

use std::fmt;

use thiserror::Error;

/// A single inequality row that the realized estimates violate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowViolation {
    pub polyhedron: usize,
    pub row: usize,
    /// `c_j - (A x)_j`; negative for a violated row.
    pub slack: f64,
}

impl fmt::Display for RowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "polyhedron {} row {} (slack {:.6e})",
            self.polyhedron, self.row, self.slack
        )
    }
}

fn join_violations(v: &[RowViolation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{0} must be non-empty")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NotFinite(&'static str),

    #[error("covariance symmetry invariant violated: |S[{row},{col}] - S[{col},{row}]| = {gap:.3e} exceeds tolerance {tol:.3e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        gap: f64,
        tol: f64,
    },

    #[error("covariance positive-definiteness invariant violated: min eigenvalue {min:.3e} <= 1e-12 * max eigenvalue {max:.3e}")]
    NotPositiveDefinite { min: f64, max: f64 },

    #[error("selector must not be the zero vector")]
    ZeroSelector,

    #[error("polyhedron row {row} is identically zero")]
    ZeroRow { row: usize },

    #[error("variance l'Sl = {0:.3e} is not positive")]
    NonPositiveVariance(f64),

    #[error("realized estimates lie outside the deviation set; closest polyhedron violations: {}", join_violations(.violations))]
    NotInDeviationSet { violations: Vec<RowViolation> },

    #[error("observed value {observed} lies outside the truncation set {support}")]
    ObservedOutsideTruncation { observed: f64, support: String },

    #[error("truncation set is empty")]
    EmptyTruncation,

    #[error("truncated-normal mass {mass:.3e} is below the numerical floor (support numerically empty)")]
    NumericallyEmptySupport { mass: f64 },

    #[error("no valid bracket for the quantile root: {0}")]
    NoBracket(String),

    #[error("probability {name} = {value} outside the open interval (0, 1)")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("could not parse selector expression `{expr}`: {reason}")]
    SelectorSyntax { expr: String, reason: String },

    #[error("simulation exhausted {total} draws with only {accepted} accepted (acceptance rate {rate:.3e})")]
    DrawBudgetExhausted {
        total: u64,
        accepted: u64,
        rate: f64,
    },

    #[error("no study deviated in {0} sampled studies")]
    NoDeviations(u64),

    #[error("{path}: {message}")]
    Document { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

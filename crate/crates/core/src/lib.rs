//! Conditionally valid inference for an estimate that is reported only
//! because the data fell in a deviation set.
//!
//! The deviation set is a finite union of polyhedra `{x : A x <= c}` in the
//! space of the estimate vector. Conditioning on it truncates the normal
//! distribution of the reported linear combination `l'x` to a union of
//! intervals, and inverting the truncated-normal CDF in its mean gives
//! quantile-unbiased estimates: an equal-tailed interval and a
//! median-unbiased point.
//!
//! ```
//! use condinf::builders::{cutoff_set, CutoffKind, CutoffSpec};
//! use condinf::inference::correct_report;
//! use condinf::model::{CovarianceMatrix, EstimateVector, InferenceProblem, Selector};
//!
//! let cov = CovarianceMatrix::from_row_slice(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
//! let pre = Selector::unit(2, 0).unwrap();
//! let rule = CutoffSpec::statistical(pre, CutoffKind::OneSidedAbove, 0.025).unwrap();
//! let problem = InferenceProblem::new(
//!     EstimateVector::from_slice(&[2.2, 0.4]).unwrap(),
//!     cov.clone(),
//!     Selector::unit(2, 1).unwrap(),
//!     cutoff_set(&rule, &cov).unwrap(),
//!     0.05,
//! )
//! .unwrap();
//! let report = correct_report(&problem).unwrap();
//! assert!(report.corrected_point < report.conventional_point);
//! ```

pub mod builders;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod normal;
pub mod sensitivity;
pub mod sim;
pub mod truncation;
pub mod truncnorm;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};
pub use inference::{correct_report, InferenceReport};
pub use model::{CovarianceMatrix, DeviationSet, EstimateVector, InferenceProblem, Polyhedron, Selector};

//! Image of a polyhedral deviation event on the line spanned by the target
//! estimate.
//!
//! Writing `x = gamma * z + rhat`, the constraint rows `A x <= c` become
//! `(A gamma)_j z <= c_j - (A rhat)_j`, so each polyhedron maps to one
//! closed interval (or nothing) in `z`, and the union of polyhedra maps to a
//! union of intervals.

use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{DeviationSet, Polyhedron, Residualization};

/// Rows with `|(A gamma)_j| <= ZERO_TOL * |A_j| * |gamma|` are treated as
/// independent of the target.
pub const ZERO_TOL: f64 = 1e-12;

/// Closed interval `[lo, hi]` on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedInterval {
    lo: f64,
    hi: f64,
}

impl ExtendedInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::NotFinite("interval endpoint"));
        }
        if lo > hi {
            return Err(Error::InvalidParameter(format!(
                "interval lower endpoint {lo} exceeds upper endpoint {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn full() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for ExtendedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lb = if self.lo.is_infinite() { '(' } else { '[' };
        let rb = if self.hi.is_infinite() { ')' } else { ']' };
        write!(f, "{lb}{}, {}{rb}", self.lo, self.hi)
    }
}

/// Sorted union of disjoint, non-touching closed intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TruncationSet {
    intervals: Vec<ExtendedInterval>,
}

impl TruncationSet {
    /// Canonicalize an arbitrary collection of intervals.
    pub fn from_intervals(mut intervals: Vec<ExtendedInterval>) -> Self {
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<ExtendedInterval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn full() -> Self {
        Self {
            intervals: vec![ExtendedInterval::full()],
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[ExtendedInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn is_full_line(&self) -> bool {
        self.intervals.len() == 1
            && self.intervals[0].lo == f64::NEG_INFINITY
            && self.intervals[0].hi == f64::INFINITY
    }

    pub fn contains(&self, z: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(z))
    }

    pub fn infimum(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.lo)
    }

    pub fn supremum(&self) -> Option<f64> {
        self.intervals.last().map(|iv| iv.hi)
    }

    /// Re-run canonicalization (idempotent on canonical input).
    pub fn canonicalized(&self) -> Self {
        Self::from_intervals(self.intervals.clone())
    }
}

impl fmt::Display for TruncationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "{{}}");
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " U ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

/// Interval of target values compatible with one polyhedron, or `None` if
/// the rows that do not involve the target already fail.
pub fn polyhedron_truncation(
    poly: &Polyhedron,
    resid: &Residualization,
) -> Result<Option<ExtendedInterval>> {
    if poly.dim() != resid.gamma.len() {
        return Err(Error::DimensionMismatch {
            context: "polyhedron truncation",
            expected: resid.gamma.len(),
            found: poly.dim(),
        });
    }
    let a = poly.a();
    let a_gamma: DVector<f64> = a * &resid.gamma;
    let slack: DVector<f64> = poly.c() - a * &resid.rhat;
    let gamma_norm = resid.gamma.norm();

    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut zero_slack = f64::INFINITY;
    for j in 0..poly.rows() {
        let coef = a_gamma[j];
        let tol = ZERO_TOL * a.row(j).norm() * gamma_norm;
        if coef.abs() <= tol {
            zero_slack = zero_slack.min(slack[j]);
        } else if coef < 0.0 {
            lower = lower.max(slack[j] / coef);
        } else {
            upper = upper.min(slack[j] / coef);
        }
    }
    if zero_slack < 0.0 || lower > upper || lower.is_nan() || upper.is_nan() {
        return Ok(None);
    }
    Ok(Some(ExtendedInterval { lo: lower, hi: upper }))
}

/// Union of the per-polyhedron intervals, canonicalized.
pub fn union_truncation(deviation: &DeviationSet, resid: &Residualization) -> Result<TruncationSet> {
    let mut parts = Vec::with_capacity(deviation.polyhedra().len());
    for p in deviation.polyhedra() {
        if let Some(iv) = polyhedron_truncation(p, resid)? {
            parts.push(iv);
        }
    }
    Ok(TruncationSet::from_intervals(parts))
}

pub fn truncation_contains(tset: &TruncationSet, z: f64) -> bool {
    tset.contains(z)
}

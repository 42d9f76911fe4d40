//! Robustness of corrected inference to the choice of deviation cutoff.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{correct_estimates, correct_report, report_from_truncation, InferenceReport, SolverOptions};
use crate::model::{residualize, DeviationSet, InferenceProblem};
use crate::truncation::{union_truncation, ExtendedInterval};

/// One cutoff value of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub kappa: f64,
    /// Whether the realized estimates lie in the deviation set at `kappa`.
    pub member: bool,
    /// Present for member rows whose solve succeeded.
    pub report: Option<InferenceReport>,
    /// Why a member row has no report.
    pub note: Option<String>,
}

impl SweepRow {
    pub fn corrected_ci(&self) -> Option<ExtendedInterval> {
        self.report.as_ref().map(|r| r.corrected_ci)
    }

    pub fn corrected_point(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.corrected_point)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub kappa_tilde: f64,
    pub epsilon: f64,
    /// Strictly increasing in `kappa`.
    pub rows: Vec<SweepRow>,
}

fn evaluate_row<F>(problem: &InferenceProblem, family: &F, kappa: f64) -> Result<SweepRow>
where
    F: Fn(f64) -> Result<DeviationSet>,
{
    let deviation = family(kappa)?;
    let x = problem.estimates.values();
    if !deviation.contains(x)? {
        return Ok(SweepRow {
            kappa,
            member: false,
            report: None,
            note: None,
        });
    }
    let outcome = correct_estimates(
        x,
        &problem.covariance,
        &problem.target,
        &deviation,
        problem.alpha,
        &SolverOptions::default(),
    );
    Ok(match outcome {
        Ok(r) => SweepRow {
            kappa,
            member: true,
            report: Some(r),
            note: None,
        },
        Err(e) => SweepRow {
            kappa,
            member: true,
            report: None,
            note: Some(e.to_string()),
        },
    })
}

/// Uniform grid over `[kappa_tilde - epsilon, kappa_tilde + epsilon]`, both
/// ends included; a single point when `epsilon = 0`.
pub fn sweep_grid(kappa_tilde: f64, epsilon: f64, grid_points: usize) -> Result<Vec<f64>> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) || !kappa_tilde.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sweep needs finite kappa and epsilon >= 0, got kappa = {kappa_tilde}, epsilon = {epsilon}"
        )));
    }
    if epsilon == 0.0 {
        return Ok(vec![kappa_tilde]);
    }
    if grid_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "sweep grid needs at least 2 points, got {grid_points}"
        )));
    }
    let lo = kappa_tilde - epsilon;
    let step = 2.0 * epsilon / (grid_points - 1) as f64;
    let mut grid: Vec<f64> = (0..grid_points).map(|i| lo + i as f64 * step).collect();
    grid[grid_points - 1] = kappa_tilde + epsilon;
    if grid_points % 2 == 1 {
        grid[grid_points / 2] = kappa_tilde;
    }
    Ok(grid)
}

/// Corrected inference under each deviation set `family(kappa)` for
/// `kappa` on a uniform grid around the reported `kappa_tilde`.
///
/// The realized estimates must belong to `family(kappa_tilde)`. Grid points
/// where they do not are kept and flagged.
pub fn cutoff_sweep<F>(
    problem: &InferenceProblem,
    family: F,
    kappa_tilde: f64,
    epsilon: f64,
    grid_points: usize,
) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<DeviationSet> + Sync,
{
    let reported = family(kappa_tilde)?;
    let x = problem.estimates.values();
    if !reported.contains(x)? {
        return Err(Error::NotInDeviationSet {
            violations: reported.violations(x)?,
        });
    }
    let grid = sweep_grid(kappa_tilde, epsilon, grid_points)?;
    let rows = grid
        .par_iter()
        .map(|&k| evaluate_row(problem, &family, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        kappa_tilde,
        epsilon,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakdownOptions {
    /// Largest `epsilon` considered.
    pub cap: f64,
    /// Resolution as a fraction of `cap`.
    pub resolution: f64,
}

impl Default for BreakdownOptions {
    fn default() -> Self {
        Self {
            cap: 1.0,
            resolution: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub epsilon: f64,
    /// The conclusion held all the way to the cap.
    pub unbounded: bool,
}

/// Largest `epsilon` such that `conclusion` holds at every `kappa` within
/// `epsilon` of `kappa_tilde` where the realized data lie in `family(kappa)`.
///
/// Cutoffs are scanned outward on a grid of spacing `resolution * cap`; the
/// first failure is then located by bisection. A member cutoff whose solve
/// fails counts as the conclusion failing.
pub fn breakdown_epsilon<F, P>(
    problem: &InferenceProblem,
    family: F,
    kappa_tilde: f64,
    conclusion: P,
    opts: &BreakdownOptions,
) -> Result<Breakdown>
where
    F: Fn(f64) -> Result<DeviationSet> + Sync,
    P: Fn(&InferenceReport) -> bool + Sync,
{
    if !(opts.cap > 0.0 && opts.cap.is_finite()) || !(opts.resolution > 0.0 && opts.resolution < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "breakdown search needs cap > 0 and resolution in (0, 1), got {opts:?}"
        )));
    }
    let holds_at = |kappa: f64| -> Result<bool> {
        let row = evaluate_row(problem, &family, kappa)?;
        Ok(match (&row.member, &row.report) {
            (false, _) => true,
            (true, Some(r)) => conclusion(r),
            (true, None) => false,
        })
    };
    let reported = family(kappa_tilde)?;
    if !reported.contains(problem.estimates.values())? {
        return Err(Error::NotInDeviationSet {
            violations: reported.violations(problem.estimates.values())?,
        });
    }
    if !holds_at(kappa_tilde)? {
        return Ok(Breakdown {
            epsilon: 0.0,
            unbounded: false,
        });
    }
    let h = opts.cap * opts.resolution;
    let steps = (1.0 / opts.resolution).round() as usize;
    let both = |eps: f64| -> Result<bool> { Ok(holds_at(kappa_tilde - eps)? && holds_at(kappa_tilde + eps)?) };
    // scan outward in chunks so rows can be evaluated in parallel
    let chunk = rayon::current_num_threads().max(1) * 4;
    let mut first_fail = None;
    let mut k = 1;
    while k <= steps && first_fail.is_none() {
        let end = (k + chunk).min(steps + 1);
        let checks: Vec<Result<bool>> = (k..end)
            .into_par_iter()
            .map(|i| both((i as f64 * h).min(opts.cap)))
            .collect();
        for (offset, c) in checks.into_iter().enumerate() {
            if !c? {
                first_fail = Some(k + offset);
                break;
            }
        }
        k = end;
    }
    let Some(fail) = first_fail else {
        return Ok(Breakdown {
            epsilon: opts.cap,
            unbounded: true,
        });
    };
    let (mut lo, mut hi) = ((fail - 1) as f64 * h, (fail as f64 * h).min(opts.cap));
    while hi - lo > 1e-3 * h {
        let mid = 0.5 * (lo + hi);
        if both(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Breakdown {
        epsilon: lo,
        unbounded: false,
    })
}

/// Predicate: the corrected interval excludes `value`.
pub fn excludes(value: f64) -> impl Fn(&InferenceReport) -> bool + Sync + Copy {
    move |r| !r.corrected_ci.contains(value)
}

/// Corrected interval conditioning only on the cell of a partition of the
/// deviation set that contains the realized data.
///
/// Valid but typically wider than conditioning on the whole deviation set.
pub fn local_report_ci(problem: &InferenceProblem, cell: &DeviationSet) -> Result<ExtendedInterval> {
    Ok(correct_report(&problem.with_deviation(cell.clone())?)?.corrected_ci)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalReport {
    /// Index of the cell containing the realized data.
    pub cell: usize,
    pub report: InferenceReport,
    pub warnings: Vec<String>,
}

/// Corrected report conditioning on the realized cell of `cells`.
///
/// Cells are meant to partition the deviation set. Overlap along the line
/// through the realized data in the target direction is reported as a
/// warning; the report is still computed from the first containing cell.
pub fn local_report(problem: &InferenceProblem, cells: &[DeviationSet]) -> Result<LocalReport> {
    if cells.is_empty() {
        return Err(Error::Empty("partition"));
    }
    let x = problem.estimates.values();
    let resid = residualize(problem)?;
    let mut warnings = Vec::new();
    let mut containing = Vec::new();
    let mut tsets = Vec::with_capacity(cells.len());
    for (m, cell) in cells.iter().enumerate() {
        if cell.contains(x)? {
            containing.push(m);
        }
        tsets.push(union_truncation(cell, &resid)?);
    }
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            let overlap = tsets[i].intervals().iter().any(|a| {
                tsets[j]
                    .intervals()
                    .iter()
                    .any(|b| a.lo().max(b.lo()) < a.hi().min(b.hi()))
            });
            if overlap {
                warnings.push(format!(
                    "cells {i} and {j} overlap; they do not form a partition and coverage is not guaranteed"
                ));
            }
        }
    }
    let Some(&cell) = containing.first() else {
        let mut violations = Vec::new();
        for c in cells {
            violations.extend(c.violations(x)?);
        }
        return Err(Error::NotInDeviationSet { violations });
    };
    let report = report_from_truncation(
        &resid,
        tsets.swap_remove(cell),
        problem.alpha,
        &SolverOptions::default(),
    )?;
    Ok(LocalReport {
        cell,
        report,
        warnings,
    })
}

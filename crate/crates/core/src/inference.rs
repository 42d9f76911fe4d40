//! Quantile conditionally unbiased estimation.
//!
//! For a target `z = l'x` observed inside its truncation set `T`, the
//! `alpha`-quantile estimator is the unique `mu` with
//! `F_TN(z; mu, sigma^2, T) = 1 - alpha`. The truncated CDF is strictly
//! decreasing in `mu`, so the root is found by bisection after expanding a
//! bracket geometrically around the observation.

use nalgebra::DVector;

use crate::error::{check_probability, Error, Result};
use crate::model::{CovarianceMatrix, DeviationSet, InferenceProblem, Residualization, Selector};
use crate::normal;
use crate::truncation::{union_truncation, ExtendedInterval, TruncationSet};
use crate::truncnorm::truncated_cdf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once `|F - (1 - alpha)|` is at most this.
    pub residual_tol: f64,
    /// Stop once the bracket is narrower than this many `sigma`.
    pub bracket_tol: f64,
    /// Half-width of the first bracket, in units of `sigma`.
    pub initial_step: f64,
    pub max_doublings: u32,
    pub max_iterations: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            bracket_tol: 1e-10,
            initial_step: 2.0,
            max_doublings: 60,
            max_iterations: 200,
        }
    }
}

/// A solved quantile and how the solver got there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileSolution {
    pub value: f64,
    pub iterations: u32,
    /// `F_TN(observed; value) - (1 - alpha)`.
    pub residual: f64,
    pub bracket_width: f64,
}

struct Objective<'a> {
    observed: f64,
    sigma: f64,
    support: &'a TruncationSet,
    target: f64,
}

impl Objective<'_> {
    fn cdf(&self, mu: f64) -> Result<f64> {
        truncated_cdf(self.observed, mu, self.sigma, self.support)
    }

    /// Evaluate at `candidate`; if the support mass is numerically empty
    /// there, walk back toward `anchor` (where evaluation succeeded).
    fn cdf_pulling_inward(&self, candidate: f64, anchor: f64) -> Result<(f64, f64)> {
        let mut mu = candidate;
        for _ in 0..64 {
            match self.cdf(mu) {
                Ok(f) => return Ok((mu, f)),
                Err(Error::NumericallyEmptySupport { .. }) => mu = 0.5 * (mu + anchor),
                Err(e) => return Err(e),
            }
        }
        Err(Error::NoBracket(format!(
            "truncated mass is numerically empty between mu = {anchor} and {candidate}"
        )))
    }
}

/// Solve `F_TN(observed; mu, sigma^2, tset) = 1 - alpha` for `mu`.
pub fn que_solve(observed: f64, sigma_post: f64, tset: &TruncationSet, alpha: f64) -> Result<f64> {
    que_solve_with(observed, sigma_post, tset, alpha, &SolverOptions::default()).map(|s| s.value)
}

pub fn que_solve_with(
    observed: f64,
    sigma_post: f64,
    tset: &TruncationSet,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<QuantileSolution> {
    check_probability("alpha", alpha)?;
    if !(sigma_post > 0.0 && sigma_post.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_post = {sigma_post} must be positive"
        )));
    }
    if !observed.is_finite() {
        return Err(Error::NotFinite("observed target estimate"));
    }
    if tset.is_empty() {
        return Err(Error::EmptyTruncation);
    }
    if !tset.contains(observed) {
        return Err(Error::ObservedOutsideTruncation {
            observed,
            support: tset.to_string(),
        });
    }
    let obj = Objective {
        observed,
        sigma: sigma_post,
        support: tset,
        target: 1.0 - alpha,
    };

    // F is decreasing in mu: need F(lo) >= target >= F(hi).
    let first = obj.cdf(observed)?;
    let step0 = opts.initial_step * sigma_post;

    let (mut lo, mut f_lo) = obj.cdf_pulling_inward(observed - step0, observed)?;
    let (mut hi, mut f_hi) = obj.cdf_pulling_inward(observed + step0, observed)?;
    let mut step = step0;
    let mut doublings = 0;
    while f_lo < obj.target {
        (hi, f_hi) = (lo, f_lo);
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(Error::NoBracket(format!(
                "F_TN({observed}; mu) stays below {} for mu down to {lo}; the observation \
                 sits at the lower edge of the support {tset}",
                obj.target
            )));
        }
        step *= 2.0;
        (lo, f_lo) = obj.cdf_pulling_inward(observed - step, lo)?;
    }
    let mut step = step0;
    let mut doublings = 0;
    while f_hi > obj.target {
        (lo, f_lo) = (hi, f_hi);
        doublings += 1;
        if doublings > opts.max_doublings {
            return Err(Error::NoBracket(format!(
                "F_TN({observed}; mu) stays above {} for mu up to {hi}; the observation \
                 sits at the upper edge of the support {tset}",
                obj.target
            )));
        }
        step *= 2.0;
        (hi, f_hi) = obj.cdf_pulling_inward(observed + step, hi)?;
    }
    let _ = first;

    let width_tol = opts.bracket_tol * sigma_post;
    let mut iterations = 0;
    loop {
        if (f_lo - obj.target).abs() <= opts.residual_tol {
            return Ok(QuantileSolution {
                value: lo,
                iterations,
                residual: f_lo - obj.target,
                bracket_width: hi - lo,
            });
        }
        if (f_hi - obj.target).abs() <= opts.residual_tol {
            return Ok(QuantileSolution {
                value: hi,
                iterations,
                residual: f_hi - obj.target,
                bracket_width: hi - lo,
            });
        }
        if hi - lo <= width_tol || iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = obj.cdf(mid)?;
        if (f_mid - obj.target).abs() <= opts.residual_tol {
            return Ok(QuantileSolution {
                value: mid,
                iterations,
                residual: f_mid - obj.target,
                bracket_width: hi - lo,
            });
        }
        if f_mid > obj.target {
            (lo, f_lo) = (mid, f_mid);
        } else {
            (hi, f_hi) = (mid, f_mid);
        }
    }
    // Bracket has collapsed: interpolate linearly inside it.
    let value = if f_lo > f_hi {
        (lo + (f_lo - obj.target) / (f_lo - f_hi) * (hi - lo)).clamp(lo, hi)
    } else {
        0.5 * (lo + hi)
    };
    let residual = obj.cdf(value)? - obj.target;
    Ok(QuantileSolution {
        value,
        iterations,
        residual,
        bracket_width: hi - lo,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub lower: QuantileSolution,
    pub point: QuantileSolution,
    pub upper: QuantileSolution,
    /// `c_k - A_k x` for every polyhedron `k`, in polyhedron order.
    pub slacks: Vec<Vec<f64>>,
    /// Distance from the observed target to the nearest finite edge of the
    /// truncation set, in units of `sigma_post` (`inf` if there is none).
    pub boundary_distance: f64,
}

/// Corrected and conventional inference for one post estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub corrected_ci: ExtendedInterval,
    pub corrected_point: f64,
    pub conventional_ci: ExtendedInterval,
    pub conventional_point: f64,
    pub truncation: TruncationSet,
    pub alpha: f64,
    pub sigma_post: f64,
    pub diagnostics: Diagnostics,
}

impl InferenceReport {
    /// Largest absolute gap between corrected and conventional endpoints.
    pub fn endpoint_gap(&self) -> f64 {
        (self.corrected_ci.lo() - self.conventional_ci.lo())
            .abs()
            .max((self.corrected_ci.hi() - self.conventional_ci.hi()).abs())
    }
}

fn boundary_distance(tset: &TruncationSet, z: f64, sigma: f64) -> f64 {
    tset.intervals()
        .iter()
        .flat_map(|iv| [iv.lo(), iv.hi()])
        .filter(|e| e.is_finite())
        .map(|e| (z - e).abs() / sigma)
        .fold(f64::INFINITY, f64::min)
}

/// Residualize, truncate, and solve for raw inputs; the realized values must
/// lie in the deviation set.
pub fn correct_estimates(
    values: &DVector<f64>,
    covariance: &CovarianceMatrix,
    target: &Selector,
    deviation: &DeviationSet,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<InferenceReport> {
    check_probability("alpha", alpha)?;
    if !deviation.contains(values)? {
        return Err(Error::NotInDeviationSet {
            violations: deviation.violations(values)?,
        });
    }
    let resid = Residualization::compute(values, covariance, target)?;
    let tset = union_truncation(deviation, &resid)?;
    report_from_truncation(&resid, tset, alpha, opts).map(|mut r| {
        r.diagnostics.slacks = deviation
            .slacks(values)
            .map(|s| s.iter().map(|v| v.iter().copied().collect()).collect())
            .unwrap_or_default();
        r
    })
}

pub(crate) fn report_from_truncation(
    resid: &Residualization,
    tset: TruncationSet,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<InferenceReport> {
    let (z, sigma) = (resid.observed, resid.sigma_post);
    let lower = que_solve_with(z, sigma, &tset, alpha / 2.0, opts)?;
    let point = que_solve_with(z, sigma, &tset, 0.5, opts)?;
    let upper = que_solve_with(z, sigma, &tset, 1.0 - alpha / 2.0, opts)?;
    let half = normal::quantile(1.0 - alpha / 2.0) * sigma;
    Ok(InferenceReport {
        corrected_ci: ExtendedInterval::new(lower.value, upper.value)?,
        corrected_point: point.value,
        conventional_ci: ExtendedInterval::new(z - half, z + half)?,
        conventional_point: z,
        alpha,
        sigma_post: sigma,
        diagnostics: Diagnostics {
            lower,
            point,
            upper,
            slacks: Vec::new(),
            boundary_distance: boundary_distance(&tset, z, sigma),
        },
        truncation: tset,
    })
}

/// Full corrected report: residualization, truncation set, and the three
/// quantile solves.
pub fn correct_report(problem: &InferenceProblem) -> Result<InferenceReport> {
    correct_report_with(problem, &SolverOptions::default())
}

pub fn correct_report_with(problem: &InferenceProblem, opts: &SolverOptions) -> Result<InferenceReport> {
    correct_estimates(
        problem.estimates.values(),
        &problem.covariance,
        &problem.target,
        &problem.deviation,
        problem.alpha,
        opts,
    )
}

fn problem_truncation(problem: &InferenceProblem) -> Result<(Residualization, TruncationSet)> {
    problem.check_membership()?;
    let resid = crate::model::residualize(problem)?;
    let tset = union_truncation(&problem.deviation, &resid)?;
    Ok((resid, tset))
}

/// Equal-tailed conditional interval `[mu*_{alpha/2}, mu*_{1-alpha/2}]`.
pub fn conditional_ci(problem: &InferenceProblem) -> Result<ExtendedInterval> {
    let (resid, tset) = problem_truncation(problem)?;
    let lo = que_solve(resid.observed, resid.sigma_post, &tset, problem.alpha / 2.0)?;
    let hi = que_solve(resid.observed, resid.sigma_post, &tset, 1.0 - problem.alpha / 2.0)?;
    ExtendedInterval::new(lo, hi)
}

/// Conditionally median-unbiased point estimate `mu*_{1/2}`.
pub fn median_unbiased_point(problem: &InferenceProblem) -> Result<f64> {
    let (resid, tset) = problem_truncation(problem)?;
    que_solve(resid.observed, resid.sigma_post, &tset, 0.5)
}

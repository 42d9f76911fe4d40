use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{ks_uniform, KsResult, Proportion};
use super::{simulate_conditional, AcceptedDraws, Procedure, SimConfig};
use crate::error::Result;
use crate::inference::que_solve;
use crate::model::Residualization;
use crate::normal;
use crate::truncation::{union_truncation, TruncationSet};
use crate::truncnorm::truncated_cdf;

/// Confidence level of the exact intervals attached to proportions.
const REPORT_CONFIDENCE: f64 = 0.99;

fn per_draw<T, F>(cfg: &SimConfig, draws: &AcceptedDraws, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&Residualization, &TruncationSet) -> Result<T> + Sync,
{
    draws
        .draws
        .par_iter()
        .map(|x| {
            let resid = Residualization::compute(x, &cfg.covariance, &cfg.target)?;
            let tset = union_truncation(&cfg.deviation, &resid)?;
            f(&resid, &tset)
        })
        .collect()
}

fn covers(cfg: &SimConfig, procedure: Procedure, r: &Residualization, t: &TruncationSet) -> Result<bool> {
    let truth = cfg.true_target();
    Ok(match procedure {
        Procedure::Conditional => {
            let lo = que_solve(r.observed, r.sigma_post, t, cfg.alpha / 2.0)?;
            let hi = que_solve(r.observed, r.sigma_post, t, 1.0 - cfg.alpha / 2.0)?;
            lo <= truth && truth <= hi
        }
        Procedure::Conventional => {
            let half = normal::quantile(1.0 - cfg.alpha / 2.0) * r.sigma_post;
            (r.observed - truth).abs() <= half
        }
    })
}

fn pivot(cfg: &SimConfig, procedure: Procedure, r: &Residualization, t: &TruncationSet) -> Result<f64> {
    let truth = cfg.true_target();
    match procedure {
        Procedure::Conditional => truncated_cdf(r.observed, truth, r.sigma_post, t),
        Procedure::Conventional => Ok(normal::cdf((r.observed - truth) / r.sigma_post)),
    }
}

fn point_at_or_above(cfg: &SimConfig, procedure: Procedure, r: &Residualization, t: &TruncationSet) -> Result<bool> {
    let point = match procedure {
        Procedure::Conditional => que_solve(r.observed, r.sigma_post, t, 0.5)?,
        Procedure::Conventional => r.observed,
    };
    Ok(point >= cfg.true_target())
}

fn proportion(hits: &[bool]) -> Result<Proportion> {
    let k = hits.iter().filter(|h| **h).count() as u64;
    Proportion::new(k, hits.len() as u64, REPORT_CONFIDENCE)
}

/// Fraction of accepted draws whose interval covers `l' beta`.
pub fn coverage_estimate(cfg: &SimConfig, procedure: Procedure) -> Result<Proportion> {
    let draws = simulate_conditional(cfg)?;
    proportion(&per_draw(cfg, &draws, |r, t| covers(cfg, procedure, r, t))?)
}

/// KS test of the pivot `F_TN(l'x; l'beta, sigma^2, T)` against `U(0, 1)`.
///
/// With [`Procedure::Conventional`] the truncation is ignored, which should
/// fail whenever the event depends on the target.
pub fn pivot_uniformity(cfg: &SimConfig, procedure: Procedure) -> Result<KsResult> {
    let draws = simulate_conditional(cfg)?;
    ks_uniform(&per_draw(cfg, &draws, |r, t| pivot(cfg, procedure, r, t))?)
}

/// `P(point >= l' beta)`; one half for a median-unbiased point estimate.
pub fn median_bias(cfg: &SimConfig, procedure: Procedure) -> Result<Proportion> {
    let draws = simulate_conditional(cfg)?;
    proportion(&per_draw(cfg, &draws, |r, t| point_at_or_above(cfg, procedure, r, t))?)
}

/// All checks on one set of accepted draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSummary {
    pub accepted: u64,
    pub total_draws: u64,
    pub acceptance_rate: f64,
    pub conditional_coverage: Proportion,
    pub conventional_coverage: Proportion,
    pub conditional_pivot: KsResult,
    pub conventional_pivot: KsResult,
    pub conditional_median: Proportion,
    pub conventional_median: Proportion,
}

// index 0 is the conditional procedure, 1 the conventional one
struct DrawOutcome {
    covered: [bool; 2],
    pivot: [f64; 2],
    above: [bool; 2],
}

/// Coverage, pivot uniformity and median bias under both procedures, sharing
/// one set of draws.
pub fn evaluate_draws(cfg: &SimConfig) -> Result<DrawSummary> {
    let draws = simulate_conditional(cfg)?;
    let truth = cfg.true_target();
    let z = normal::quantile(1.0 - cfg.alpha / 2.0);
    let rows = per_draw(cfg, &draws, |r, t| {
        let lo = que_solve(r.observed, r.sigma_post, t, cfg.alpha / 2.0)?;
        let hi = que_solve(r.observed, r.sigma_post, t, 1.0 - cfg.alpha / 2.0)?;
        let med = que_solve(r.observed, r.sigma_post, t, 0.5)?;
        Ok(DrawOutcome {
            covered: [lo <= truth && truth <= hi, (r.observed - truth).abs() <= z * r.sigma_post],
            pivot: [
                truncated_cdf(r.observed, truth, r.sigma_post, t)?,
                normal::cdf((r.observed - truth) / r.sigma_post),
            ],
            above: [med >= truth, r.observed >= truth],
        })
    })?;
    let col = |f: fn(&DrawOutcome) -> bool| rows.iter().map(f).collect::<Vec<_>>();
    let colf = |f: fn(&DrawOutcome) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(DrawSummary {
        accepted: draws.draws.len() as u64,
        total_draws: draws.total_draws,
        acceptance_rate: draws.acceptance_rate(),
        conditional_coverage: proportion(&col(|r| r.covered[0]))?,
        conventional_coverage: proportion(&col(|r| r.covered[1]))?,
        conditional_pivot: ks_uniform(&colf(|r| r.pivot[0]))?,
        conventional_pivot: ks_uniform(&colf(|r| r.pivot[1]))?,
        conditional_median: proportion(&col(|r| r.above[0]))?,
        conventional_median: proportion(&col(|r| r.above[1]))?,
    })
}

//! Coverage of the plug-in procedure on non-normal microdata.
//!
//! Each replication draws a randomized experiment with a binary treatment
//! and two outcomes, estimates both treatment effects by OLS with a joint
//! heteroskedasticity-robust covariance, applies a one-sided significance
//! rule to the first effect using the estimated standard error, and on
//! deviation reports a corrected interval for the second effect.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Proportion;
use super::{split_quota, stream_rng, STREAMS};
use crate::builders::scaled_cutoff;
use crate::error::{check_probability, Error, Result};
use crate::inference::que_solve;
use crate::model::{CovarianceMatrix, DeviationSet, Polyhedron, Residualization, Selector};
use crate::normal;
use crate::truncation::union_truncation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorLaw {
    Normal,
    /// `Exp(1) - 1`: mean zero, unit variance, skewness 2.
    CenteredExponential,
}

impl ErrorLaw {
    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Normal => StandardNormal.sample(rng),
            Self::CenteredExponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginConfig {
    pub sample_sizes: Vec<usize>,
    /// Deviating replications per sample size.
    pub reps: u64,
    /// Correlation between the two outcomes' errors.
    pub rho: f64,
    /// Mean of the first effect's t-statistic; the true first effect shrinks
    /// like `1/sqrt(n)` so the deviation probability is stable across `n`.
    pub pre_t_mean: f64,
    /// True second effect.
    pub beta_post: f64,
    /// Deviate when the first t-statistic is at least `q`.
    pub q: f64,
    pub alpha: f64,
    pub errors: ErrorLaw,
    pub seed: u64,
    /// Give up after this many replications per deviating one requested.
    pub max_attempts_per_rep: u64,
}

impl Default for PluginConfig {
    fn default() -> Self {
        Self {
            sample_sizes: vec![100, 400, 1600],
            reps: 2000,
            rho: 0.6,
            pre_t_mean: 1.644_853_626_951_472_2,
            beta_post: 0.0,
            q: 1.644_853_626_951_472_2,
            alpha: 0.05,
            errors: ErrorLaw::CenteredExponential,
            seed: 1,
            max_attempts_per_rep: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginRow {
    pub n: usize,
    pub attempts: u64,
    pub conditional: Proportion,
    pub conventional: Proportion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginResult {
    pub rows: Vec<PluginRow>,
}

const TREATED_SHARE: f64 = 0.5;
/// Error scale in the treated arm (heteroskedasticity).
const TREATED_SCALE: f64 = 1.5;

/// Asymptotic standard deviation of `sqrt(n)` times an effect estimate.
fn effect_sd() -> f64 {
    (TREATED_SCALE * TREATED_SCALE / TREATED_SHARE + 1.0 / (1.0 - TREATED_SHARE)).sqrt()
}

struct Estimates {
    beta: DVector<f64>,
    covariance: CovarianceMatrix,
}

fn draw_experiment(cfg: &PluginConfig, n: usize, rng: &mut ChaCha8Rng) -> Result<Estimates> {
    let beta_pre = cfg.pre_t_mean * effect_sd() / (n as f64).sqrt();
    let mix = (1.0 - cfg.rho * cfg.rho).sqrt();
    let mut d = Vec::with_capacity(n);
    let mut y = [Vec::with_capacity(n), Vec::with_capacity(n)];
    for _ in 0..n {
        let treated = rng.random::<f64>() < TREATED_SHARE;
        let scale = if treated { TREATED_SCALE } else { 1.0 };
        let u1 = cfg.errors.draw(rng);
        let u2 = cfg.errors.draw(rng);
        let t = f64::from(u8::from(treated));
        d.push(t);
        y[0].push(beta_pre * t + scale * u1);
        y[1].push(cfg.beta_post * t + scale * (cfg.rho * u1 + mix * u2));
    }
    let nf = n as f64;
    let dbar = d.iter().sum::<f64>() / nf;
    let xt: Vec<f64> = d.iter().map(|v| v - dbar).collect();
    let sxx: f64 = xt.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sample of size {n} has no variation in treatment"
        )));
    }
    let mut slope = [0.0; 2];
    let mut resid = [vec![0.0; n], vec![0.0; n]];
    for k in 0..2 {
        let ybar = y[k].iter().sum::<f64>() / nf;
        slope[k] = xt.iter().zip(&y[k]).map(|(a, b)| a * b).sum::<f64>() / sxx;
        for i in 0..n {
            resid[k][i] = y[k][i] - ybar - slope[k] * xt[i];
        }
    }
    let mut s = [0.0; 4];
    for i in 0..n {
        let w = xt[i] * xt[i];
        s[0] += w * resid[0][i] * resid[0][i];
        s[1] += w * resid[0][i] * resid[1][i];
        s[3] += w * resid[1][i] * resid[1][i];
    }
    s[2] = s[1];
    let denom = sxx * sxx;
    Ok(Estimates {
        beta: DVector::from_column_slice(&slope),
        covariance: CovarianceMatrix::from_row_slice(2, &s.map(|v| v / denom))?,
    })
}

/// Conditional and conventional coverage of the second effect among
/// replications that deviate, for each sample size.
pub fn plugin_asymptotics_sim(cfg: &PluginConfig) -> Result<PluginResult> {
    check_probability("alpha", cfg.alpha)?;
    if !(cfg.rho > -1.0 && cfg.rho < 1.0) {
        return Err(Error::InvalidParameter(format!("rho = {} must be in (-1, 1)", cfg.rho)));
    }
    if cfg.reps == 0 || cfg.sample_sizes.iter().any(|&n| n < 4) {
        return Err(Error::InvalidParameter(
            "need reps >= 1 and every sample size >= 4".into(),
        ));
    }
    let pre = Selector::unit(2, 0)?;
    let post = Selector::unit(2, 1)?;
    let z = normal::quantile(1.0 - cfg.alpha / 2.0);
    let mut rows = Vec::with_capacity(cfg.sample_sizes.len());
    for (j, &n) in cfg.sample_sizes.iter().enumerate() {
        let quotas = split_quota(cfg.reps);
        let caps = split_quota(cfg.reps.saturating_mul(cfg.max_attempts_per_rep));
        let parts: Vec<(u64, u64, u64, u64)> = (0..STREAMS)
            .into_par_iter()
            .map(|k| -> Result<_> {
                let mut rng = stream_rng(cfg.seed, (j as u64) * STREAMS + k);
                let (mut attempts, mut accepted, mut cond, mut conv) = (0, 0, 0, 0);
                while accepted < quotas[k as usize] && attempts < caps[k as usize] {
                    attempts += 1;
                    let est = draw_experiment(cfg, n, &mut rng)?;
                    // estimated cutoff q * se_hat, recomputed from the estimated covariance
                    let c = scaled_cutoff(cfg.q, &pre, &est.covariance)?;
                    let deviation = DeviationSet::new(
                        vec![Polyhedron::half_space(&DVector::from_column_slice(&[-1.0, 0.0]), -c)?],
                        "",
                    )?;
                    if !deviation.contains(&est.beta)? {
                        continue;
                    }
                    accepted += 1;
                    let r = Residualization::compute(&est.beta, &est.covariance, &post)?;
                    let t = union_truncation(&deviation, &r)?;
                    let lo = que_solve(r.observed, r.sigma_post, &t, cfg.alpha / 2.0)?;
                    let hi = que_solve(r.observed, r.sigma_post, &t, 1.0 - cfg.alpha / 2.0)?;
                    cond += u64::from(lo <= cfg.beta_post && cfg.beta_post <= hi);
                    conv += u64::from((r.observed - cfg.beta_post).abs() <= z * r.sigma_post);
                }
                Ok((attempts, accepted, cond, conv))
            })
            .collect::<Result<_>>()?;
        let attempts = parts.iter().map(|p| p.0).sum();
        let accepted: u64 = parts.iter().map(|p| p.1).sum();
        if accepted < cfg.reps {
            return Err(Error::DrawBudgetExhausted {
                total: attempts,
                accepted,
                rate: accepted as f64 / attempts as f64,
            });
        }
        rows.push(PluginRow {
            n,
            attempts,
            conditional: Proportion::new(parts.iter().map(|p| p.2).sum(), accepted, 0.99)?,
            conventional: Proportion::new(parts.iter().map(|p| p.3).sum(), accepted, 0.99)?,
        });
    }
    Ok(PluginResult { rows })
}

//! Seeded Monte Carlo validation of the conditional procedure.
//!
//! Every simulation splits its work into a fixed number of independent
//! ChaCha streams derived from one seed, so results are identical for a
//! given seed regardless of how many threads rayon uses.

mod checks;
mod meta;
mod plugin;
mod stats;

pub use checks::{coverage_estimate, evaluate_draws, median_bias, pivot_uniformity, DrawSummary};
pub use meta::{
    meta_study_sim, BivariateStudies, MetaResult, MetaStop, Mixture, PointMass, Study, StudyDistribution,
};
pub use plugin::{plugin_asymptotics_sim, ErrorLaw, PluginConfig, PluginResult};
pub use stats::{clopper_pearson, ks_uniform, KsResult, Proportion};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_probability, Error, Result};
use crate::model::{CovarianceMatrix, DeviationSet, Selector};

/// Number of independent random streams work is split across.
pub const STREAMS: u64 = 64;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Split `total` into `STREAMS` near-equal shares.
pub(crate) fn split_quota(total: u64) -> Vec<u64> {
    (0..STREAMS)
        .map(|k| total / STREAMS + u64::from(k < total % STREAMS))
        .collect()
}

/// Which interval or point estimate a check evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Procedure {
    /// Condition on the deviation set.
    Conditional,
    /// Ignore the deviation set.
    Conventional,
}

/// `N(mean, S)` sampler using the symmetric square root of `S`.
#[derive(Debug, Clone)]
pub struct NormalSampler {
    mean: DVector<f64>,
    root: DMatrix<f64>,
}

impl NormalSampler {
    pub fn new(mean: DVector<f64>, covariance: &CovarianceMatrix) -> Result<Self> {
        if mean.len() != covariance.dim() {
            return Err(Error::DimensionMismatch {
                context: "normal sampler mean",
                expected: covariance.dim(),
                found: mean.len(),
            });
        }
        Ok(Self {
            mean,
            root: covariance.symmetric_sqrt(),
        })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let z = DVector::from_fn(self.mean.len(), |_, _| StandardNormal.sample(rng));
        &self.mean + &self.root * z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub true_beta: DVector<f64>,
    pub covariance: CovarianceMatrix,
    pub deviation: DeviationSet,
    pub target: Selector,
    pub alpha: f64,
    /// Stop after this many draws land in the deviation set.
    pub n_accepted: u64,
    pub seed: u64,
    pub max_total_draws: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let d = self.covariance.dim();
        for (context, found) in [
            ("true parameter vector", self.true_beta.len()),
            ("deviation set", self.deviation.dim()),
            ("target selector", self.target.dim()),
        ] {
            if found != d {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: d,
                    found,
                });
            }
        }
        check_probability("alpha", self.alpha)?;
        if self.n_accepted == 0 || self.max_total_draws < self.n_accepted {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= n_accepted ({}) <= max_total_draws ({})",
                self.n_accepted, self.max_total_draws
            )));
        }
        Ok(())
    }

    /// `l' beta`.
    pub fn true_target(&self) -> f64 {
        self.target.weights().dot(&self.true_beta)
    }
}

/// Draws that landed in the deviation set.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedDraws {
    pub draws: Vec<DVector<f64>>,
    pub total_draws: u64,
}

impl AcceptedDraws {
    pub fn acceptance_rate(&self) -> f64 {
        self.draws.len() as f64 / self.total_draws as f64
    }
}

/// Rejection sampling from `N(true_beta, S)` restricted to the deviation set.
pub fn simulate_conditional(cfg: &SimConfig) -> Result<AcceptedDraws> {
    cfg.validate()?;
    let sampler = NormalSampler::new(cfg.true_beta.clone(), &cfg.covariance)?;
    let quotas = split_quota(cfg.n_accepted);
    let budgets = split_quota(cfg.max_total_draws);
    let parts: Vec<(Vec<DVector<f64>>, u64)> = (0..STREAMS)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let mut rng = stream_rng(cfg.seed, k);
            let (quota, budget) = (quotas[k as usize], budgets[k as usize]);
            let mut kept = Vec::with_capacity(quota as usize);
            let mut drawn = 0;
            while (kept.len() as u64) < quota && drawn < budget {
                let x = sampler.sample(&mut rng);
                drawn += 1;
                if cfg.deviation.contains(&x)? {
                    kept.push(x);
                }
            }
            Ok((kept, drawn))
        })
        .collect::<Result<_>>()?;
    let total_draws: u64 = parts.iter().map(|p| p.1).sum();
    let accepted: u64 = parts.iter().map(|p| p.0.len() as u64).sum();
    if accepted < cfg.n_accepted {
        return Err(Error::DrawBudgetExhausted {
            total: total_draws,
            accepted,
            rate: accepted as f64 / total_draws as f64,
        });
    }
    Ok(AcceptedDraws {
        draws: parts.into_iter().flat_map(|p| p.0).collect(),
        total_draws,
    })
}

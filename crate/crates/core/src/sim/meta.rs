//! Average coverage across a population of studies, each reporting its post
//! estimate only when its own deviation event occurs.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::Proportion;
use super::{split_quota, stream_rng, NormalSampler, Procedure, STREAMS};
use crate::builders::{cutoff_set, CutoffKind, CutoffSpec};
use crate::error::{check_probability, Error, Result};
use crate::inference::que_solve;
use crate::model::{CovarianceMatrix, DeviationSet, Residualization, Selector};
use crate::normal;
use crate::truncation::union_truncation;

/// One study: true means, covariance, deviation set and reported target.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub mean: DVector<f64>,
    pub covariance: CovarianceMatrix,
    pub deviation: DeviationSet,
    pub target: Selector,
}

impl Study {
    pub fn validate(&self) -> Result<()> {
        let d = self.covariance.dim();
        for (context, found) in [
            ("study mean", self.mean.len()),
            ("study deviation set", self.deviation.dim()),
            ("study target", self.target.dim()),
        ] {
            if found != d {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: d,
                    found,
                });
            }
        }
        Ok(())
    }
}

/// A sampler over studies.
pub trait StudyDistribution: Sync {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Study>;
}

/// Every study is the same.
#[derive(Debug, Clone)]
pub struct PointMass(pub Study);

impl StudyDistribution for PointMass {
    fn sample(&self, _rng: &mut ChaCha8Rng) -> Result<Study> {
        Ok(self.0.clone())
    }
}

/// Finite mixture of study distributions.
pub struct Mixture {
    cumulative: Vec<f64>,
    components: Vec<Box<dyn StudyDistribution>>,
}

impl Mixture {
    pub fn new(components: Vec<(f64, Box<dyn StudyDistribution>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("mixture components"));
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if components.iter().any(|c| !(c.0 >= 0.0 && c.0.is_finite())) || !(total > 0.0) {
            return Err(Error::InvalidParameter(
                "mixture weights must be nonnegative with a positive sum".into(),
            ));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(components.len());
        let mut boxes = Vec::with_capacity(components.len());
        for (w, c) in components {
            acc += w / total;
            cumulative.push(acc);
            boxes.push(c);
        }
        Ok(Self {
            cumulative,
            components: boxes,
        })
    }
}

impl StudyDistribution for Mixture {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Study> {
        let u: f64 = rng.random();
        let k = self
            .cumulative
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.components.len() - 1);
        self.components[k].sample(rng)
    }
}

/// Two estimates with unit variances and correlation `rho`; the event is a
/// cutoff on the first, the target is the second. True means are drawn
/// independently from normals.
#[derive(Debug, Clone)]
pub struct BivariateStudies {
    covariance: CovarianceMatrix,
    deviation: DeviationSet,
    pre_mean: Normal<f64>,
    post_mean: Normal<f64>,
}

impl BivariateStudies {
    /// `threshold` is `eta` for statistical kinds and `kappa` for economic ones.
    /// Means are `N(pre.0, pre.1^2)` and `N(post.0, post.1^2)`.
    pub fn new(rho: f64, kind: CutoffKind, threshold: f64, pre: (f64, f64), post: (f64, f64)) -> Result<Self> {
        let covariance = CovarianceMatrix::from_row_slice(2, &[1.0, rho, rho, 1.0])?;
        let e0 = Selector::unit(2, 0)?;
        let spec = if kind.is_economic() {
            CutoffSpec::economic(e0, kind, threshold)?
        } else {
            CutoffSpec::statistical(e0, kind, threshold)?
        };
        let normal = |(m, s): (f64, f64)| {
            Normal::new(m, s).map_err(|e| Error::InvalidParameter(format!("mean distribution: {e}")))
        };
        Ok(Self {
            deviation: cutoff_set(&spec, &covariance)?,
            covariance,
            pre_mean: normal(pre)?,
            post_mean: normal(post)?,
        })
    }
}

impl StudyDistribution for BivariateStudies {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<Study> {
        Ok(Study {
            mean: DVector::from_column_slice(&[self.pre_mean.sample(rng), self.post_mean.sample(rng)]),
            covariance: self.covariance.clone(),
            deviation: self.deviation.clone(),
            target: Selector::unit(2, 1)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaStop {
    /// Simulate exactly this many studies.
    Studies(u64),
    /// Simulate until this many studies deviate, giving up after
    /// `max_studies`.
    Deviations { target: u64, max_studies: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaResult {
    pub studies: u64,
    pub deviations: u64,
    /// Average coverage rate over deviating studies.
    pub acr: Proportion,
}

fn covered(study: &Study, x: &DVector<f64>, procedure: Procedure, alpha: f64) -> Result<bool> {
    let truth = study.target.weights().dot(&study.mean);
    let r = Residualization::compute(x, &study.covariance, &study.target)?;
    Ok(match procedure {
        Procedure::Conditional => {
            let t = union_truncation(&study.deviation, &r)?;
            let lo = que_solve(r.observed, r.sigma_post, &t, alpha / 2.0)?;
            let hi = que_solve(r.observed, r.sigma_post, &t, 1.0 - alpha / 2.0)?;
            lo <= truth && truth <= hi
        }
        Procedure::Conventional => (r.observed - truth).abs() <= normal::quantile(1.0 - alpha / 2.0) * r.sigma_post,
    })
}

/// Sample studies, draw one estimate vector per study, and among studies
/// whose draw deviates record whether the reported interval covers.
pub fn meta_study_sim(
    dist: &dyn StudyDistribution,
    stop: MetaStop,
    procedure: Procedure,
    alpha: f64,
    seed: u64,
) -> Result<MetaResult> {
    check_probability("alpha", alpha)?;
    let (quotas, caps): (Vec<u64>, Vec<u64>) = match stop {
        MetaStop::Studies(t) => {
            if t == 0 {
                return Err(Error::InvalidParameter("need at least one study".into()));
            }
            (vec![u64::MAX; STREAMS as usize], split_quota(t))
        }
        MetaStop::Deviations { target, max_studies } => {
            if target == 0 || max_studies < target {
                return Err(Error::InvalidParameter(format!(
                    "need 1 <= target deviations ({target}) <= max_studies ({max_studies})"
                )));
            }
            (split_quota(target), split_quota(max_studies))
        }
    };
    let parts: Vec<(u64, u64, u64)> = (0..STREAMS)
        .into_par_iter()
        .map(|k| -> Result<_> {
            let mut rng = stream_rng(seed, k);
            let (quota, cap) = (quotas[k as usize], caps[k as usize]);
            let (mut studies, mut deviations, mut hits) = (0, 0, 0);
            while studies < cap && deviations < quota {
                let study = dist.sample(&mut rng)?;
                study.validate()?;
                let x = NormalSampler::new(study.mean.clone(), &study.covariance)?.sample(&mut rng);
                studies += 1;
                if study.deviation.contains(&x)? {
                    deviations += 1;
                    hits += u64::from(covered(&study, &x, procedure, alpha)?);
                }
            }
            Ok((studies, deviations, hits))
        })
        .collect::<Result<_>>()?;
    let studies = parts.iter().map(|p| p.0).sum();
    let deviations = parts.iter().map(|p| p.1).sum();
    let hits = parts.iter().map(|p| p.2).sum();
    if deviations == 0 {
        return Err(Error::NoDeviations(studies));
    }
    if let MetaStop::Deviations { target, .. } = stop {
        if deviations < target {
            return Err(Error::DrawBudgetExhausted {
                total: studies,
                accepted: deviations,
                rate: deviations as f64 / studies as f64,
            });
        }
    }
    Ok(MetaResult {
        studies,
        deviations,
        acr: Proportion::new(hits, deviations, 0.99)?,
    })
}

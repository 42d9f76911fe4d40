//! Constructors that turn common reasons for deviating into polyhedral
//! deviation sets.
//!
//! Statistical cutoffs are always of the form `q * sqrt(v' S v)` with the
//! standard error recomputed from the supplied covariance, so the same code
//! serves exact and plug-in covariances.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::model::{select_variance, CovarianceMatrix, DeviationSet, Polyhedron, Selector};
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    /// `|v'x| >= z_{1-eta/2} se`
    TwoSidedSignificant,
    /// `|v'x| <= z_{1-eta/2} se`
    TwoSidedInsignificant,
    /// `v'x >= z_{1-eta} se`
    OneSidedAbove,
    /// `v'x <= -z_{1-eta} se`
    OneSidedBelow,
    /// `v'x >= kappa`
    EconomicAbove,
    /// `v'x <= -kappa`
    EconomicBelow,
}

impl CutoffKind {
    pub fn is_economic(self) -> bool {
        matches!(self, Self::EconomicAbove | Self::EconomicBelow)
    }
}

impl fmt::Display for CutoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::TwoSidedSignificant => "two_sided_significant",
            Self::TwoSidedInsignificant => "two_sided_insignificant",
            Self::OneSidedAbove => "one_sided_above",
            Self::OneSidedBelow => "one_sided_below",
            Self::EconomicAbove => "economic_above",
            Self::EconomicBelow => "economic_below",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for CutoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "two_sided_significant" | "significance" => Self::TwoSidedSignificant,
            "two_sided_insignificant" | "insignificance" => Self::TwoSidedInsignificant,
            "one_sided_above" => Self::OneSidedAbove,
            "one_sided_below" => Self::OneSidedBelow,
            "economic_above" => Self::EconomicAbove,
            "economic_below" => Self::EconomicBelow,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown cutoff kind `{other}`"
                )))
            }
        })
    }
}

/// A single cutoff rule on `v'x`. Statistical kinds carry `eta`, economic
/// kinds carry `kappa`, never both.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSpec {
    selector: Selector,
    kind: CutoffKind,
    eta: Option<f64>,
    kappa: Option<f64>,
}

impl CutoffSpec {
    pub fn new(selector: Selector, kind: CutoffKind, eta: Option<f64>, kappa: Option<f64>) -> Result<Self> {
        match (kind.is_economic(), eta, kappa) {
            (false, Some(e), None) => check_probability("eta", e)?,
            (true, None, Some(k)) => {
                if !(k >= 0.0 && k.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "kappa = {k} must be a finite nonnegative number"
                    )));
                }
            }
            (false, _, _) => {
                return Err(Error::InvalidParameter(format!(
                    "{kind} cutoff needs eta and no kappa"
                )))
            }
            (true, _, _) => {
                return Err(Error::InvalidParameter(format!(
                    "{kind} cutoff needs kappa and no eta"
                )))
            }
        }
        Ok(Self {
            selector,
            kind,
            eta,
            kappa,
        })
    }

    pub fn statistical(selector: Selector, kind: CutoffKind, eta: f64) -> Result<Self> {
        Self::new(selector, kind, Some(eta), None)
    }

    pub fn economic(selector: Selector, kind: CutoffKind, kappa: f64) -> Result<Self> {
        Self::new(selector, kind, None, Some(kappa))
    }

    pub fn selector(&self) -> &Selector {
        &self.selector
    }

    pub fn kind(&self) -> CutoffKind {
        self.kind
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    pub fn kappa(&self) -> Option<f64> {
        self.kappa
    }

    /// Cutoff on `|v'x|` or `v'x` in estimate units.
    pub fn threshold(&self, covariance: &CovarianceMatrix) -> Result<f64> {
        match self.kind {
            CutoffKind::EconomicAbove | CutoffKind::EconomicBelow => Ok(self.kappa.unwrap_or(0.0)),
            kind => {
                let eta = self.eta.unwrap_or(f64::NAN);
                let q = match kind {
                    CutoffKind::TwoSidedSignificant | CutoffKind::TwoSidedInsignificant => {
                        normal::quantile(1.0 - eta / 2.0)
                    }
                    _ => normal::quantile(1.0 - eta),
                };
                scaled_cutoff(q, &self.selector, covariance)
            }
        }
    }
}

/// `q * sqrt(v' S v)`.
pub fn scaled_cutoff(q: f64, v: &Selector, covariance: &CovarianceMatrix) -> Result<f64> {
    Ok(q * select_variance(covariance, v)?.sqrt())
}

fn half(w: &DVector<f64>, sign: f64, c: f64) -> Result<Polyhedron> {
    Polyhedron::half_space(&(w * sign), c)
}

fn expect_kind(spec: &CutoffSpec, kinds: &[CutoffKind], op: &str) -> Result<()> {
    if kinds.contains(&spec.kind) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{op} does not accept a {} cutoff", spec.kind)))
    }
}

/// Deviation set for `kind` with the cutoff `t` given directly in estimate
/// units, whatever the kind. Used when sweeping over cutoffs.
pub fn threshold_set(selector: &Selector, kind: CutoffKind, t: f64) -> Result<DeviationSet> {
    use CutoffKind::*;
    if !t.is_finite() {
        return Err(Error::NotFinite("cutoff"));
    }
    let w = selector.weights();
    match kind {
        TwoSidedSignificant => DeviationSet::new(
            vec![half(w, 1.0, -t)?, half(w, -1.0, -t)?],
            format!("|v'x| >= {t}"),
        ),
        TwoSidedInsignificant => {
            let a = DMatrix::from_fn(2, w.len(), |i, j| if i == 0 { -w[j] } else { w[j] });
            DeviationSet::new(
                vec![Polyhedron::new(a, DVector::from_element(2, t))?],
                format!("|v'x| <= {t}"),
            )
        }
        OneSidedAbove | EconomicAbove => DeviationSet::new(vec![half(w, -1.0, -t)?], format!("v'x >= {t}")),
        OneSidedBelow | EconomicBelow => DeviationSet::new(vec![half(w, 1.0, -t)?], format!("v'x <= {}", -t)),
    }
}

/// `{x : |v'x| >= z_{1-eta/2} se}` as a union of two half-spaces.
pub fn significance_set(spec: &CutoffSpec, covariance: &CovarianceMatrix) -> Result<DeviationSet> {
    expect_kind(spec, &[CutoffKind::TwoSidedSignificant], "significance_set")?;
    let t = spec.threshold(covariance)?;
    Ok(threshold_set(&spec.selector, spec.kind, t)?
        .with_provenance(format!("two-sided significance at eta = {}", spec.eta.unwrap_or(f64::NAN))))
}

/// `{x : |v'x| <= z_{1-eta/2} se}` as one polyhedron with two rows.
pub fn insignificance_set(spec: &CutoffSpec, covariance: &CovarianceMatrix) -> Result<DeviationSet> {
    expect_kind(spec, &[CutoffKind::TwoSidedInsignificant], "insignificance_set")?;
    let t = spec.threshold(covariance)?;
    Ok(threshold_set(&spec.selector, spec.kind, t)?
        .with_provenance(format!("two-sided insignificance at eta = {}", spec.eta.unwrap_or(f64::NAN))))
}

/// One-sided statistical or economic cutoff as a single half-space.
pub fn one_sided_set(spec: &CutoffSpec, covariance: &CovarianceMatrix) -> Result<DeviationSet> {
    use CutoffKind::*;
    expect_kind(
        spec,
        &[OneSidedAbove, OneSidedBelow, EconomicAbove, EconomicBelow],
        "one_sided_set",
    )?;
    let t = spec.threshold(covariance)?;
    let set = threshold_set(&spec.selector, spec.kind, t)?;
    let what = set.provenance().to_string();
    Ok(set.with_provenance(format!("{}: {what}", spec.kind)))
}

/// Dispatch on the cutoff kind.
pub fn cutoff_set(spec: &CutoffSpec, covariance: &CovarianceMatrix) -> Result<DeviationSet> {
    match spec.kind {
        CutoffKind::TwoSidedSignificant => significance_set(spec, covariance),
        CutoffKind::TwoSidedInsignificant => insignificance_set(spec, covariance),
        _ => one_sided_set(spec, covariance),
    }
}

/// Intersection of unions: every combination of one polyhedron from each
/// input, row-stacked.
pub fn intersect(sets: &[DeviationSet]) -> Result<DeviationSet> {
    let (first, rest) = sets.split_first().ok_or(Error::Empty("intersect input"))?;
    let mut acc: Vec<Polyhedron> = first.polyhedra().to_vec();
    for set in rest {
        if set.dim() != first.dim() {
            return Err(Error::DimensionMismatch {
                context: "intersect",
                expected: first.dim(),
                found: set.dim(),
            });
        }
        let mut next = Vec::with_capacity(acc.len() * set.polyhedra().len());
        for p in &acc {
            for q in set.polyhedra() {
                next.push(p.stack(q)?);
            }
        }
        acc = next;
    }
    let provenance = sets
        .iter()
        .map(|s| s.provenance())
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" and ");
    DeviationSet::new(acc, provenance)
}

/// Positions of the five arms of a naps / night-sleep factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BessoneArms {
    pub n: usize,
    pub ne: usize,
    pub ni: usize,
    pub e: usize,
    pub i: usize,
}

impl BessoneArms {
    pub const DEFAULT_LABELS: [&'static str; 5] = ["tauN", "tauNE", "tauNI", "tauE", "tauI"];

    /// Look up the arms by name, in the order `N, NE, NI, E, I`.
    pub fn from_labels(labels: &[String], names: [&str; 5]) -> Result<Self> {
        let find = |name: &str| {
            labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::UnknownLabel(name.to_string()))
        };
        Ok(Self {
            n: find(names[0])?,
            ne: find(names[1])?,
            ni: find(names[2])?,
            e: find(names[3])?,
            i: find(names[4])?,
        })
    }
}

/// Significance levels for the three deviation reasons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BessoneEta {
    pub power: f64,
    pub interpretability: f64,
    pub economic: f64,
}

impl BessoneEta {
    pub fn uniform(eta: f64) -> Self {
        Self {
            power: eta,
            interpretability: eta,
            economic: eta,
        }
    }
}

/// The three deviation reasons for pooling sleep treatments.
#[derive(Debug, Clone, PartialEq)]
pub struct BessoneSets {
    /// Nap interactions with night-sleep arms are insignificant.
    pub power: DeviationSet,
    /// Both night-sleep arms are individually insignificant.
    pub interpretability: DeviationSet,
    /// The nap effect is significant.
    pub economic: DeviationSet,
}

impl BessoneSets {
    /// All three reasons together.
    pub fn combined(&self) -> Result<DeviationSet> {
        intersect(&[
            self.power.clone(),
            self.interpretability.clone(),
            self.economic.clone(),
        ])
    }
}

pub fn bessone_sets(arms: &BessoneArms, eta: &BessoneEta, covariance: &CovarianceMatrix) -> Result<BessoneSets> {
    let d = covariance.dim();
    for idx in [arms.n, arms.ne, arms.ni, arms.e, arms.i] {
        if idx >= d {
            return Err(Error::DimensionMismatch {
                context: "treatment arm index",
                expected: d,
                found: idx,
            });
        }
    }
    let contrast = |a: usize, b: usize| {
        let mut w = DVector::zeros(d);
        w[a] += 1.0;
        w[b] -= 1.0;
        Selector::new(w)
    };
    let insig = |sel: Selector, eta: f64| {
        insignificance_set(
            &CutoffSpec::statistical(sel, CutoffKind::TwoSidedInsignificant, eta)?,
            covariance,
        )
    };
    let power = intersect(&[
        insig(contrast(arms.n, arms.ne)?, eta.power)?,
        insig(contrast(arms.n, arms.ni)?, eta.power)?,
    ])?
    .with_provenance("power: |tauN - tauNE| and |tauN - tauNI| insignificant");
    let interpretability = intersect(&[
        insig(Selector::unit(d, arms.e)?, eta.interpretability)?,
        insig(Selector::unit(d, arms.i)?, eta.interpretability)?,
    ])?
    .with_provenance("interpretability: tauE and tauI insignificant");
    let economic = significance_set(
        &CutoffSpec::statistical(
            Selector::unit(d, arms.n)?,
            CutoffKind::TwoSidedSignificant,
            eta.economic,
        )?,
        covariance,
    )?
    .with_provenance("economic: tauN significant");
    Ok(BessoneSets {
        power,
        interpretability,
        economic,
    })
}

/// Largest t-statistic `|tau2 - tau1| / sqrt(2 sigma^2)` at which pooling
/// two arms beats the unbiased estimate under the posterior, for
/// `ratio = sigma^2 / v^2`.
pub fn counterfactual_threshold(ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "variance ratio {ratio} must be positive"
        )));
    }
    Ok((ratio * (1.0 + ratio)).sqrt())
}

/// Prior average MSE of `w tau1_hat + (1 - w) tau2_hat` for the first arm,
/// with arm effects iid `N(m, v2)` and prior mean sampling variance
/// `mean_sigma2`.
pub fn prior_average_risk(w: f64, v2: f64, mean_sigma2: f64) -> f64 {
    let u = 1.0 - w;
    u * u * 2.0 * v2 + mean_sigma2 * (w * w + u * u)
}

/// Posterior average MSE of the same estimator after observing both arm
/// estimates with known sampling variance `sigma2`.
pub fn posterior_average_risk(w: f64, tau1: f64, tau2: f64, sigma2: f64, v2: f64) -> f64 {
    let shrink = v2 / (v2 + sigma2);
    let gap2 = shrink * shrink * (tau2 - tau1).powi(2) + 2.0 * (1.0 - shrink) * v2;
    let u = 1.0 - w;
    u * u * gap2 + sigma2 * (w * w + u * u)
}

/// Whether the threshold rule says to pool.
pub fn counterfactual_deviates(tau1: f64, tau2: f64, sigma2: f64, v2: f64) -> Result<bool> {
    let t = (tau2 - tau1).abs() / (2.0 * sigma2).sqrt();
    Ok(t <= counterfactual_threshold(sigma2 / v2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cov2(rho: f64) -> CovarianceMatrix {
        CovarianceMatrix::from_row_slice(2, &[1.0, rho, rho, 1.0]).unwrap()
    }

    fn e(d: usize, i: usize) -> Selector {
        Selector::unit(d, i).unwrap()
    }

    #[test]
    fn significance_rows() {
        let s = significance_set(
            &CutoffSpec::statistical(e(2, 0), CutoffKind::TwoSidedSignificant, 0.05).unwrap(),
            &cov2(0.3),
        )
        .unwrap();
        assert_eq!(s.polyhedra().len(), 2);
        assert!((s.polyhedra()[0].c()[0] + 1.959_964).abs() < 1e-6);
        assert_eq!(s.polyhedra()[0].a()[(0, 0)], 1.0);
        assert_eq!(s.polyhedra()[1].a()[(0, 0)], -1.0);
        let s10 = significance_set(
            &CutoffSpec::statistical(e(2, 0), CutoffKind::TwoSidedSignificant, 0.10).unwrap(),
            &cov2(0.3),
        )
        .unwrap();
        assert!((s10.polyhedra()[1].c()[0] + 1.644_854).abs() < 1e-6);
    }

    #[test]
    fn insignificance_rows() {
        let s = insignificance_set(
            &CutoffSpec::statistical(e(2, 0), CutoffKind::TwoSidedInsignificant, 0.05).unwrap(),
            &cov2(0.0),
        )
        .unwrap();
        let p = &s.polyhedra()[0];
        assert_eq!(s.polyhedra().len(), 1);
        assert_eq!(p.a().as_slice(), &[-1.0, 1.0, 0.0, 0.0]);
        assert!((p.c()[0] - 1.96).abs() < 1e-3 && p.c()[0] == p.c()[1]);
        assert!(s.contains(&DVector::from_column_slice(&[0.0, 5.0])).unwrap());
    }

    #[test]
    fn spec_validation() {
        use CutoffKind::*;
        assert!(CutoffSpec::new(e(2, 0), TwoSidedSignificant, Some(0.05), Some(1.0)).is_err());
        assert!(CutoffSpec::new(e(2, 0), EconomicAbove, Some(0.05), None).is_err());
        assert!(CutoffSpec::statistical(e(2, 0), OneSidedAbove, 1.0).is_err());
        assert!(CutoffSpec::economic(e(2, 0), EconomicBelow, -0.1).is_err());
        let sig = CutoffSpec::statistical(e(2, 0), OneSidedAbove, 0.05).unwrap();
        assert!(significance_set(&sig, &cov2(0.0)).is_err());
    }

    #[test]
    fn cutoffs_use_the_supplied_standard_error() {
        let cov = CovarianceMatrix::from_row_slice(2, &[4.0, 0.0, 0.0, 1.0]).unwrap();
        let spec = CutoffSpec::statistical(e(2, 0), CutoffKind::OneSidedAbove, 0.05).unwrap();
        let t = spec.threshold(&cov).unwrap();
        assert!((t - 2.0 * 1.644_853_626_951_472_2).abs() < 1e-12);
        let econ = CutoffSpec::economic(e(2, 0), CutoffKind::EconomicAbove, 0.7).unwrap();
        assert_eq!(econ.threshold(&cov).unwrap(), 0.7);
    }

    fn draw(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
        DVector::from_fn(d, |_, _| rng.random_range(-4.0..4.0))
    }

    #[test]
    fn membership_fuzz_against_indicators() {
        use CutoffKind::*;
        let cov = CovarianceMatrix::from_row_slice(3, &[1.0, 0.3, 0.1, 0.3, 2.0, 0.4, 0.1, 0.4, 0.5]).unwrap();
        let v = Selector::from_slice(&[1.0, -1.0, 0.5]).unwrap();
        let se = cov.quadratic_form(v.weights()).unwrap().sqrt();
        let z2 = normal::quantile(0.975);
        let z1 = normal::quantile(0.95);
        type Rule = Box<dyn Fn(f64) -> bool>;
        let sets: Vec<(DeviationSet, Rule)> = vec![
            (
                cutoff_set(&CutoffSpec::statistical(v.clone(), TwoSidedSignificant, 0.05).unwrap(), &cov).unwrap(),
                Box::new(move |t| t.abs() >= z2 * se),
            ),
            (
                cutoff_set(&CutoffSpec::statistical(v.clone(), TwoSidedInsignificant, 0.05).unwrap(), &cov).unwrap(),
                Box::new(move |t| t.abs() <= z2 * se),
            ),
            (
                cutoff_set(&CutoffSpec::statistical(v.clone(), OneSidedAbove, 0.05).unwrap(), &cov).unwrap(),
                Box::new(move |t| t >= z1 * se),
            ),
            (
                cutoff_set(&CutoffSpec::statistical(v.clone(), OneSidedBelow, 0.05).unwrap(), &cov).unwrap(),
                Box::new(move |t| t <= -z1 * se),
            ),
            (
                cutoff_set(&CutoffSpec::economic(v.clone(), EconomicAbove, 0.8).unwrap(), &cov).unwrap(),
                Box::new(|t| t >= 0.8),
            ),
            (
                cutoff_set(&CutoffSpec::economic(v.clone(), EconomicBelow, 0.8).unwrap(), &cov).unwrap(),
                Box::new(|t| t <= -0.8),
            ),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let x = draw(&mut rng, 3);
            let t = v.apply(&x).unwrap();
            for (set, oracle) in &sets {
                // skip draws within rounding of the boundary
                if set.slacks(&x).unwrap().iter().any(|s| s.iter().any(|v| v.abs() < 1e-12)) {
                    continue;
                }
                assert_eq!(set.contains(&x).unwrap(), oracle(t), "{} at {x}", set.provenance());
            }
        }
    }

    #[test]
    fn intersect_structure_and_membership() {
        let cov = cov2(0.4);
        let sig = cutoff_set(
            &CutoffSpec::statistical(e(2, 0), CutoffKind::TwoSidedSignificant, 0.05).unwrap(),
            &cov,
        )
        .unwrap();
        let ins = cutoff_set(
            &CutoffSpec::statistical(e(2, 1), CutoffKind::TwoSidedInsignificant, 0.10).unwrap(),
            &cov,
        )
        .unwrap();
        let both = intersect(&[ins.clone(), ins.clone()]).unwrap();
        assert_eq!(both.polyhedra().len(), 1);
        assert_eq!(both.polyhedra()[0].rows(), 4);
        let mixed = intersect(&[sig.clone(), ins.clone()]).unwrap();
        assert_eq!(mixed.polyhedra().len(), 2);
        let swapped = intersect(&[ins.clone(), sig.clone()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let x = draw(&mut rng, 2);
            let expected = sig.contains(&x).unwrap() && ins.contains(&x).unwrap();
            assert_eq!(mixed.contains(&x).unwrap(), expected);
            assert_eq!(swapped.contains(&x).unwrap(), expected);
        }
        let other = DeviationSet::full(3).unwrap();
        assert!(intersect(&[sig, other]).is_err());
        assert!(intersect(&[]).is_err());
    }

    #[test]
    fn bessone_structure() {
        let labels: Vec<String> = ["tauN", "tauNE", "tauNI", "tauE", "tauI"].iter().map(|s| s.to_string()).collect();
        let arms = BessoneArms::from_labels(&labels, BessoneArms::DEFAULT_LABELS).unwrap();
        let cov = CovarianceMatrix::identity(5);
        let sets = bessone_sets(&arms, &BessoneEta::uniform(0.05), &cov).unwrap();
        assert_eq!(sets.power.polyhedra().len(), 1);
        assert_eq!(sets.power.polyhedra()[0].rows(), 4);
        assert_eq!(sets.interpretability.polyhedra()[0].rows(), 4);
        assert_eq!(sets.economic.polyhedra().len(), 2);
        let full = sets.combined().unwrap();
        assert_eq!(full.polyhedra().len(), 2);
        assert!(full.polyhedra().iter().all(|p| p.rows() == 9));
        // contrast se is sqrt(2) under identity covariance
        let c = sets.power.polyhedra()[0].c()[0];
        assert!((c - 1.959_963_984_540_054 * 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            BessoneArms::from_labels(&labels[..4], BessoneArms::DEFAULT_LABELS),
            Err(Error::UnknownLabel(l)) if l == "tauI"
        ));
    }

    #[test]
    fn threshold_values() {
        assert!((counterfactual_threshold(1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(counterfactual_threshold(1e-12).unwrap() < 1e-5);
        assert!(counterfactual_threshold(0.0).is_err());
        assert!(counterfactual_threshold(-1.0).is_err());
    }

    #[test]
    fn prior_risk_pair() {
        assert_eq!(prior_average_risk(1.0, 2.0, 0.5), 0.5);
        assert!((prior_average_risk(0.5, 2.0, 0.5) - (2.0 + 0.5) / 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn significance_is_monotone_in_eta(
            x0 in -4.0f64..4.0, x1 in -4.0f64..4.0, e1 in 0.001f64..0.5, e2 in 0.001f64..0.5,
        ) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let cov = cov2(0.2);
            let x = DVector::from_column_slice(&[x0, x1]);
            let strict = significance_set(&CutoffSpec::statistical(e(2, 0), CutoffKind::TwoSidedSignificant, lo).unwrap(), &cov).unwrap();
            let loose = significance_set(&CutoffSpec::statistical(e(2, 0), CutoffKind::TwoSidedSignificant, hi).unwrap(), &cov).unwrap();
            if strict.contains(&x).unwrap() {
                prop_assert!(loose.contains(&x).unwrap());
            }
        }

        #[test]
        fn intersect_is_associative_on_membership(
            x0 in -3.0f64..3.0, x1 in -3.0f64..3.0, k1 in 0.0f64..2.0, k2 in 0.0f64..2.0, eta in 0.01f64..0.5,
        ) {
            let cov = cov2(-0.3);
            let a = cutoff_set(&CutoffSpec::economic(e(2, 0), CutoffKind::EconomicAbove, k1).unwrap(), &cov).unwrap();
            let b = cutoff_set(&CutoffSpec::economic(e(2, 1), CutoffKind::EconomicBelow, k2).unwrap(), &cov).unwrap();
            let c = cutoff_set(&CutoffSpec::statistical(e(2, 1), CutoffKind::TwoSidedSignificant, eta).unwrap(), &cov).unwrap();
            let x = DVector::from_column_slice(&[x0, x1]);
            let left = intersect(&[intersect(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
            let right = intersect(&[a, intersect(&[b, c]).unwrap()]).unwrap();
            prop_assert_eq!(left.contains(&x).unwrap(), right.contains(&x).unwrap());
        }
    }
}

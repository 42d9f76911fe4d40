//! The TOML problem document.
//!
//! ```toml
//! alpha = 0.05
//! target = "post"
//!
//! [estimates]
//! labels = ["pre", "post"]
//! values = [2.1, 0.4]
//!
//! [covariance]
//! rows = [[1.0, 0.5], [0.5, 1.0]]
//!
//! [deviation]
//! kind = "one_sided_above"
//! selector = "pre"
//! eta = 0.05
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::expr::parse_selector;
use crate::builders::{
    bessone_sets, cutoff_set, intersect, BessoneArms, BessoneEta, CutoffKind, CutoffSpec,
};
use crate::error::{Error, Result};
use crate::model::{
    CovarianceMatrix, DeviationSet, EstimateVector, InferenceProblem, Polyhedron, Selector,
};
use crate::sim::{ErrorLaw, PluginConfig};

pub const DEFAULT_ALPHA: f64 = 0.05;

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn doc_err(path: impl Into<String>, e: impl ToString) -> Error {
    Error::Document {
        path: path.into(),
        message: e.to_string(),
    }
}

/// A linear combination of estimates: an expression over labels or a raw
/// weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SelectorSpec {
    Expr(String),
    Weights(Vec<f64>),
}

impl SelectorSpec {
    pub fn resolve(&self, labels: &[String], path: &str) -> Result<Selector> {
        match self {
            Self::Expr(e) => parse_selector(e, labels).map_err(|err| doc_err(path, err)),
            Self::Weights(w) => {
                if w.len() != labels.len() {
                    return Err(doc_err(
                        path,
                        format!("{} weights for {} estimates", w.len(), labels.len()),
                    ));
                }
                Selector::from_slice(w).map_err(|err| doc_err(path, err))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    /// Row-major.
    pub rows: Vec<Vec<f64>>,
}

/// `a x <= c`, each row of `a` a selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyhedronSpec {
    pub a: Vec<SelectorSpec>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BessonePart {
    Power,
    Interpretability,
    Economic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviationSpec {
    /// The whole space: no conditioning.
    Full,
    /// Union of raw polyhedra.
    Polyhedra {
        polyhedra: Vec<PolyhedronSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        note: Option<String>,
    },
    Significance { selector: SelectorSpec, eta: f64 },
    Insignificance { selector: SelectorSpec, eta: f64 },
    OneSidedAbove { selector: SelectorSpec, eta: f64 },
    OneSidedBelow { selector: SelectorSpec, eta: f64 },
    EconomicAbove { selector: SelectorSpec, kappa: f64 },
    EconomicBelow { selector: SelectorSpec, kappa: f64 },
    Intersect { sets: Vec<DeviationSpec> },
    Union { sets: Vec<DeviationSpec> },
    /// Pooling rules of a five-arm nap / night-sleep design.
    Bessone {
        /// Arm labels in the order N, NE, NI, E, I.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<Vec<String>>,
        #[serde(default = "default_alpha")]
        eta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta_power: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta_interpretability: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta_economic: Option<f64>,
        /// Which reasons to impose; all three when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        parts: Option<Vec<BessonePart>>,
    },
}

impl DeviationSpec {
    pub fn build(&self, labels: &[String], cov: &CovarianceMatrix, path: &str) -> Result<DeviationSet> {
        let d = labels.len();
        let cutoff = |selector: &SelectorSpec, kind: CutoffKind, eta: Option<f64>, kappa: Option<f64>| {
            let sel = selector.resolve(labels, &format!("{path}.selector"))?;
            let spec = CutoffSpec::new(sel, kind, eta, kappa).map_err(|e| doc_err(path, e))?;
            cutoff_set(&spec, cov).map_err(|e| doc_err(path, e))
        };
        let children = |sets: &[DeviationSpec]| -> Result<Vec<DeviationSet>> {
            if sets.is_empty() {
                return Err(doc_err(format!("{path}.sets"), "needs at least one set"));
            }
            sets.iter()
                .enumerate()
                .map(|(i, s)| s.build(labels, cov, &format!("{path}.sets[{i}]")))
                .collect()
        };
        match self {
            Self::Full => DeviationSet::full(d).map_err(|e| doc_err(path, e)),
            Self::Polyhedra { polyhedra, note } => {
                if polyhedra.is_empty() {
                    return Err(doc_err(format!("{path}.polyhedra"), "needs at least one polyhedron"));
                }
                let mut polys = Vec::with_capacity(polyhedra.len());
                for (k, p) in polyhedra.iter().enumerate() {
                    let here = format!("{path}.polyhedra[{k}]");
                    if p.a.len() != p.c.len() {
                        return Err(doc_err(
                            here,
                            format!("{} rows in a but {} entries in c", p.a.len(), p.c.len()),
                        ));
                    }
                    if p.a.is_empty() {
                        return Err(doc_err(here, "polyhedron needs at least one row"));
                    }
                    let mut a = DMatrix::zeros(p.a.len(), d);
                    for (j, row) in p.a.iter().enumerate() {
                        let sel = row.resolve(labels, &format!("{here}.a[{j}]"))?;
                        a.set_row(j, &sel.weights().transpose());
                    }
                    polys.push(Polyhedron::new(a, DVector::from_column_slice(&p.c)).map_err(|e| doc_err(&here, e))?);
                }
                DeviationSet::new(polys, note.clone().unwrap_or_default()).map_err(|e| doc_err(path, e))
            }
            Self::Significance { selector, eta } => cutoff(selector, CutoffKind::TwoSidedSignificant, Some(*eta), None),
            Self::Insignificance { selector, eta } => {
                cutoff(selector, CutoffKind::TwoSidedInsignificant, Some(*eta), None)
            }
            Self::OneSidedAbove { selector, eta } => cutoff(selector, CutoffKind::OneSidedAbove, Some(*eta), None),
            Self::OneSidedBelow { selector, eta } => cutoff(selector, CutoffKind::OneSidedBelow, Some(*eta), None),
            Self::EconomicAbove { selector, kappa } => cutoff(selector, CutoffKind::EconomicAbove, None, Some(*kappa)),
            Self::EconomicBelow { selector, kappa } => cutoff(selector, CutoffKind::EconomicBelow, None, Some(*kappa)),
            Self::Intersect { sets } => intersect(&children(sets)?).map_err(|e| doc_err(path, e)),
            Self::Union { sets } => {
                let built = children(sets)?;
                let provenance = built.iter().map(|s| s.provenance()).collect::<Vec<_>>().join(" or ");
                let polys = built.iter().flat_map(|s| s.polyhedra().iter().cloned()).collect();
                DeviationSet::new(polys, provenance).map_err(|e| doc_err(path, e))
            }
            Self::Bessone {
                arms,
                eta,
                eta_power,
                eta_interpretability,
                eta_economic,
                parts,
            } => {
                let names: [&str; 5] = match arms {
                    None => BessoneArms::DEFAULT_LABELS,
                    Some(v) if v.len() == 5 => [v[0].as_str(), v[1].as_str(), v[2].as_str(), v[3].as_str(), v[4].as_str()],
                    Some(v) => return Err(doc_err(format!("{path}.arms"), format!("need 5 labels, got {}", v.len()))),
                };
                let arms = BessoneArms::from_labels(labels, names).map_err(|e| doc_err(format!("{path}.arms"), e))?;
                let eta = BessoneEta {
                    power: eta_power.unwrap_or(*eta),
                    interpretability: eta_interpretability.unwrap_or(*eta),
                    economic: eta_economic.unwrap_or(*eta),
                };
                let sets = bessone_sets(&arms, &eta, cov).map_err(|e| doc_err(path, e))?;
                let chosen: Vec<DeviationSet> = match parts {
                    None => vec![sets.power, sets.interpretability, sets.economic],
                    Some(p) if p.is_empty() => return Err(doc_err(format!("{path}.parts"), "needs at least one part")),
                    Some(p) => p
                        .iter()
                        .map(|part| match part {
                            BessonePart::Power => sets.power.clone(),
                            BessonePart::Interpretability => sets.interpretability.clone(),
                            BessonePart::Economic => sets.economic.clone(),
                        })
                        .collect(),
                };
                intersect(&chosen).map_err(|e| doc_err(path, e))
            }
        }
    }
}

/// Default cutoff sweep for `condinf sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `kind:selector`, e.g. `economic_above:pre`.
    pub family: String,
    pub kappa: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    41
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaComponentSpec {
    #[serde(default = "one")]
    pub weight: f64,
    pub rho: f64,
    pub kind: CutoffKind,
    /// `eta` for statistical kinds, `kappa` for economic ones.
    pub threshold: f64,
    /// Mean and standard deviation of the pre estimate's true value.
    pub pre: [f64; 2],
    pub post: [f64; 2],
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaSpec {
    /// Stop once this many studies deviate...
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviations: Option<u64>,
    /// ...or after this many studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub studies: Option<u64>,
    pub components: Vec<MetaComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_t_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_post: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_attempts_per_rep: Option<u64>,
}

impl AsymptoticsSpec {
    pub fn config(&self, alpha: f64, seed: u64) -> PluginConfig {
        let d = PluginConfig::default();
        PluginConfig {
            sample_sizes: self.sample_sizes.clone().unwrap_or(d.sample_sizes),
            reps: self.reps.unwrap_or(d.reps),
            rho: self.rho.unwrap_or(d.rho),
            pre_t_mean: self.pre_t_mean.unwrap_or(d.pre_t_mean),
            beta_post: self.beta_post.unwrap_or(d.beta_post),
            q: self.q.unwrap_or(d.q),
            alpha,
            errors: self.errors.unwrap_or(d.errors),
            seed,
            max_attempts_per_rep: self.max_attempts_per_rep.unwrap_or(d.max_attempts_per_rep),
        }
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    /// Defaults to the estimates themselves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_accepted: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_total_draws: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asymptotics: Option<AsymptoticsSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub target: SelectorSpec,
    pub estimates: EstimatesSpec,
    pub covariance: CovarianceSpec,
    pub deviation: DeviationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
}

/// A file that only configures `simulate --mode meta|asymptotics`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
struct SimulationOnly {
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    simulation: SimulationSpec,
}

/// `x1, x2, ...`
pub fn default_labels(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

impl ProblemDocument {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| doc_err(origin, e.to_string().trim_end()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| doc_err("<emit>", e))
    }

    pub fn labels(&self) -> Vec<String> {
        self.estimates
            .labels
            .clone()
            .unwrap_or_else(|| default_labels(self.estimates.values.len()))
    }

    /// Validate into an [`InferenceProblem`], expanding builder specs.
    pub fn to_problem(&self) -> Result<InferenceProblem> {
        let d = self.estimates.values.len();
        if d == 0 {
            return Err(doc_err("estimates.values", "must be non-empty"));
        }
        let labels = self.labels();
        if labels.len() != d {
            return Err(doc_err(
                "estimates.labels",
                format!("{} labels for {d} values", labels.len()),
            ));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(doc_err("estimates.labels", format!("duplicate label `{l}`")));
            }
            let ok = l.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                && l.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.');
            if !ok {
                return Err(doc_err("estimates.labels", format!("`{l}` is not a valid label")));
            }
        }
        let estimates = EstimateVector::new(DVector::from_column_slice(&self.estimates.values), labels.clone())
            .map_err(|e| doc_err("estimates.values", e))?;
        let rows = &self.covariance.rows;
        if rows.len() != d {
            return Err(doc_err("covariance.rows", format!("{} rows for {d} estimates", rows.len())));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(doc_err(
                    format!("covariance.rows[{i}]"),
                    format!("{} entries for {d} estimates", r.len()),
                ));
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let covariance = CovarianceMatrix::from_row_slice(d, &flat).map_err(|e| doc_err("covariance.rows", e))?;
        let target = self.target.resolve(&labels, "target")?;
        let deviation = self.deviation.build(&labels, &covariance, "deviation")?;
        InferenceProblem::new(estimates, covariance, target, deviation, self.alpha).map_err(|e| doc_err("alpha", e))
    }

    /// The problem in canonical form: explicit labels and alpha, numeric
    /// target weights, and the deviation set as raw polyhedra.
    pub fn from_problem(problem: &InferenceProblem) -> Self {
        let labels = problem.estimates.labels().to_vec();
        let cov = problem.covariance.entries();
        let polyhedra = problem
            .deviation
            .polyhedra()
            .iter()
            .map(|p| PolyhedronSpec {
                a: (0..p.rows())
                    .map(|j| SelectorSpec::Weights(p.a().row(j).iter().copied().collect()))
                    .collect(),
                c: p.c().iter().copied().collect(),
            })
            .collect();
        let note = problem.deviation.provenance();
        Self {
            alpha: problem.alpha,
            target: SelectorSpec::Weights(problem.target.weights().iter().copied().collect()),
            estimates: EstimatesSpec {
                labels: Some(labels),
                values: problem.estimates.values().iter().copied().collect(),
            },
            covariance: CovarianceSpec {
                rows: (0..cov.nrows()).map(|i| cov.row(i).iter().copied().collect()).collect(),
            },
            deviation: DeviationSpec::Polyhedra {
                polyhedra,
                note: (!note.is_empty()).then(|| note.to_string()),
            },
            sweep: None,
            simulation: None,
        }
    }
}

/// Read and validate a problem document.
pub fn parse_problem(path: &Path) -> Result<InferenceProblem> {
    load_document(path)?.1.to_problem().map_err(|e| prefix(path, e))
}

/// Raw bytes and parsed document.
pub fn load_document(path: &Path) -> Result<(Vec<u8>, ProblemDocument)> {
    let bytes = std::fs::read(path).map_err(|e| doc_err(path.display().to_string(), e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| doc_err(path.display().to_string(), e))?;
    let doc = ProblemDocument::from_toml_str(&text, &path.display().to_string())?;
    Ok((bytes, doc))
}

/// Alpha and simulation settings from a file that need not hold a problem.
pub(crate) fn load_simulation_only(path: &Path) -> Result<(Vec<u8>, f64, SimulationSpec)> {
    let bytes = std::fs::read(path).map_err(|e| doc_err(path.display().to_string(), e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| doc_err(path.display().to_string(), e))?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| doc_err(path.display().to_string(), e.to_string().trim_end()))?;
    let only: SimulationOnly = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| doc_err(path.display().to_string(), e.to_string().trim_end()))?;
    Ok((bytes, only.alpha, only.simulation))
}

pub(crate) fn prefix(path: &Path, e: Error) -> Error {
    match e {
        Error::Document { path: field, message } => Error::Document {
            path: format!("{}: {field}", path.display()),
            message,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_SIDED: &str = r#"
alpha = 0.1
target = "post"

[estimates]
labels = ["pre", "post"]
values = [2.1, 0.4]

[covariance]
rows = [[1.0, 0.5], [0.5, 1.0]]

[deviation]
kind = "one_sided_above"
selector = "pre"
eta = 0.05
"#;

    #[test]
    fn minimal_document() {
        let doc = ProblemDocument::from_toml_str(ONE_SIDED, "t").unwrap();
        let p = doc.to_problem().unwrap();
        assert_eq!(p.alpha, 0.1);
        assert_eq!(p.target.weights().as_slice(), &[0.0, 1.0]);
        assert_eq!(p.deviation.polyhedra().len(), 1);
        let t = p.deviation.polyhedra()[0].c()[0];
        assert!((t + 1.6448536269514722).abs() < 1e-12);
    }

    fn err_text(text: &str) -> String {
        let doc = match ProblemDocument::from_toml_str(text, "t") {
            Ok(d) => d,
            Err(e) => return e.to_string(),
        };
        doc.to_problem().unwrap_err().to_string()
    }

    #[test]
    fn field_path_diagnostics() {
        let asym = ONE_SIDED.replace("[0.5, 1.0]]", "[0.4, 1.0]]");
        let e = err_text(&asym);
        assert!(e.starts_with("covariance.rows:") && e.contains("symmetry invariant"), "{e}");

        let e = err_text(&ONE_SIDED.replace("selector = \"pre\"", "selector = \"pree\""));
        assert!(e.contains("deviation.selector") && e.contains("unknown label `pree`"), "{e}");

        let e = err_text(&ONE_SIDED.replace("eta = 0.05", "eta = 1.5"));
        assert!(e.starts_with("deviation:") && e.contains("eta"), "{e}");

        let e = err_text(&ONE_SIDED.replace("kind = \"one_sided_above\"", "kind = \"sideways\""));
        assert!(e.contains("sideways"), "{e}");

        let e = err_text(&ONE_SIDED.replace("alpha = 0.1", "alpha = 0.1\nalhpa = 3"));
        assert!(e.contains("alhpa"), "{e}");

        let e = err_text(&ONE_SIDED.replace("values = [2.1, 0.4]", "values = [2.1]"));
        assert!(e.contains("estimates.labels"), "{e}");
    }

    #[test]
    fn builders_and_raw_polyhedra_agree() {
        let raw = ONE_SIDED.replace(
            "kind = \"one_sided_above\"\nselector = \"pre\"\neta = 0.05",
            "kind = \"polyhedra\"\n[[deviation.polyhedra]]\na = [\"-pre\"]\nc = [-1.6448536269514722]",
        );
        let a = ProblemDocument::from_toml_str(ONE_SIDED, "t").unwrap().to_problem().unwrap();
        let b = ProblemDocument::from_toml_str(&raw, "t").unwrap().to_problem().unwrap();
        let (pa, pb) = (&a.deviation.polyhedra()[0], &b.deviation.polyhedra()[0]);
        assert_eq!(pa.a(), pb.a());
        assert!((pa.c()[0] - pb.c()[0]).abs() < 1e-15);
    }

    #[test]
    fn nested_sets() {
        let text = r#"
target = [0.0, 0.0, 1.0]
[estimates]
values = [2.5, 0.1, 0.3]
[covariance]
rows = [[1.0, 0.2, 0.3], [0.2, 1.0, 0.1], [0.3, 0.1, 1.0]]
[deviation]
kind = "intersect"
[[deviation.sets]]
kind = "significance"
selector = "x1"
eta = 0.05
[[deviation.sets]]
kind = "union"
[[deviation.sets.sets]]
kind = "economic_above"
selector = "x2 - x1"
kappa = 0.0
[[deviation.sets.sets]]
kind = "insignificance"
selector = [0.0, 1.0, 0.0]
eta = 0.1
"#;
        let p = ProblemDocument::from_toml_str(text, "t").unwrap().to_problem().unwrap();
        assert_eq!(p.deviation.polyhedra().len(), 4);
        assert!(p.check_membership().is_ok());
    }
}

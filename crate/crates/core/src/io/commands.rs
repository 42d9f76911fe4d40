//! The `correct`, `sweep`, `simulate` and `validate` commands. Each returns
//! the rendered output; the binary only decides where it goes.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::document::{load_document, load_simulation_only, prefix, ProblemDocument};
use super::expr::parse_selector;
use super::report::{format_real, sweep_csv, ReportDocument, SimulationDocument};
use crate::builders::{scaled_cutoff, threshold_set, CutoffKind};
use crate::error::{Error, Result};
use crate::inference::{correct_report, InferenceReport};
use crate::model::{DeviationSet, InferenceProblem, Selector};
use crate::sensitivity::{cutoff_sweep, SweepResult};
use crate::sim::{
    coverage_estimate, median_bias, meta_study_sim, pivot_uniformity, plugin_asymptotics_sim,
    BivariateStudies, MetaStop, Mixture, Procedure, SimConfig, StudyDistribution,
};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "CONDINF_SEED";
/// Seed used when neither the command line, the environment nor the
/// document supplies one.
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_N_ACCEPTED: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Table,
    Csv,
    Machine,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "machine" | "json" => Ok(Self::Machine),
            other => Err(Error::InvalidParameter(format!(
                "unknown format `{other}` (expected table, csv or machine)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Coverage,
    Pivot,
    Median,
    Meta,
    Asymptotics,
}

impl SimMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Coverage => "coverage",
            Self::Pivot => "pivot",
            Self::Median => "median",
            Self::Meta => "meta",
            Self::Asymptotics => "asymptotics",
        }
    }
}

impl FromStr for SimMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "coverage" => Self::Coverage,
            "pivot" => Self::Pivot,
            "median" => Self::Median,
            "meta" => Self::Meta,
            "asymptotics" => Self::Asymptotics,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown mode `{other}` (expected coverage, pivot, median, meta or asymptotics)"
                )))
            }
        })
    }
}

/// A one-parameter family of cutoff rules, written `kind:selector`.
///
/// For economic kinds `kappa` is the cutoff itself; for statistical kinds it
/// multiplies the standard error of the selected combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFamily {
    pub kind: CutoffKind,
    pub selector: Selector,
    /// Standard error of `v'x`, used for statistical kinds.
    pub se: f64,
}

impl SweepFamily {
    pub fn parse(spec: &str, problem: &InferenceProblem) -> Result<Self> {
        let (kind, expr) = spec.split_once(':').ok_or_else(|| {
            Error::InvalidParameter(format!("sweep family `{spec}` is not of the form kind:selector"))
        })?;
        let kind = CutoffKind::from_str(kind.trim())?;
        let selector = parse_selector(expr, problem.estimates.labels())?;
        let se = scaled_cutoff(1.0, &selector, &problem.covariance)?;
        Ok(Self { kind, selector, se })
    }

    pub fn threshold(&self, kappa: f64) -> f64 {
        if self.kind.is_economic() {
            kappa
        } else {
            kappa * self.se
        }
    }

    pub fn set(&self, kappa: f64) -> Result<DeviationSet> {
        threshold_set(&self.selector, self.kind, self.threshold(kappa))
    }
}

pub struct CorrectOutput {
    pub report: InferenceReport,
    pub document: ReportDocument,
    pub rendered: String,
}

fn render_table(problem: &InferenceProblem, r: &InferenceReport, target: &str) -> String {
    let mut s = String::new();
    let t = r.truncation.to_string();
    let _ = writeln!(s, "target        {target}");
    let _ = writeln!(s, "deviation     {}", problem.deviation.provenance());
    let _ = writeln!(s, "alpha         {}", r.alpha);
    let _ = writeln!(s, "sigma         {:.6}", r.sigma_post);
    let _ = writeln!(s, "truncation    {t}");
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<14}{:>14}{:>14}{:>14}", "", "estimate", "ci_lo", "ci_hi");
    for (name, point, ci) in [
        ("corrected", r.corrected_point, r.corrected_ci),
        ("conventional", r.conventional_point, r.conventional_ci),
    ] {
        let _ = writeln!(s, "{name:<14}{point:>14.6}{:>14.6}{:>14.6}", ci.lo(), ci.hi());
    }
    s
}

fn render_correct_csv(r: &InferenceReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["procedure", "ci_lo", "ci_hi", "point"])?;
    for (name, point, ci) in [
        ("corrected", r.corrected_point, r.corrected_ci),
        ("conventional", r.conventional_point, r.conventional_ci),
    ] {
        w.write_record([name.to_string(), format_real(ci.lo()), format_real(ci.hi()), format_real(point)])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn target_text(doc: &ProblemDocument) -> String {
    match &doc.target {
        super::document::SelectorSpec::Expr(e) => e.clone(),
        super::document::SelectorSpec::Weights(w) => format!("{w:?}"),
    }
}

/// Corrected inference for the problem in `path`.
pub fn cmd_correct(path: &Path, alpha: Option<f64>, format: OutputFormat) -> Result<CorrectOutput> {
    let (bytes, doc) = load_document(path)?;
    let mut problem = doc.to_problem().map_err(|e| prefix(path, e))?;
    if let Some(a) = alpha {
        problem = problem.with_alpha(a)?;
    }
    let report = correct_report(&problem)?;
    let document = ReportDocument::new(&report, problem.deviation.provenance(), &bytes, None);
    let rendered = match format {
        OutputFormat::Table => render_table(&problem, &report, &target_text(&doc)),
        OutputFormat::Csv => render_correct_csv(&report)?,
        OutputFormat::Machine => document.to_json()? + "\n",
    };
    Ok(CorrectOutput {
        report,
        document,
        rendered,
    })
}

/// Overrides for the document's `[sweep]` table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepArgs {
    pub family: Option<String>,
    pub kappa: Option<f64>,
    pub epsilon: Option<f64>,
    pub grid: Option<usize>,
}

pub struct SweepOutput {
    pub result: SweepResult,
    pub csv: String,
}

/// Cutoff sweep; the output is always CSV.
pub fn cmd_sweep(path: &Path, args: &SweepArgs) -> Result<SweepOutput> {
    let (_, doc) = load_document(path)?;
    let problem = doc.to_problem().map_err(|e| prefix(path, e))?;
    let section = doc.sweep.as_ref();
    let missing = |what: &str| {
        Error::InvalidParameter(format!("sweep needs --{what} or `{what}` in the [sweep] table"))
    };
    let family_spec = args
        .family
        .clone()
        .or_else(|| section.map(|s| s.family.clone()))
        .ok_or_else(|| missing("family"))?;
    let kappa = args.kappa.or(section.map(|s| s.kappa)).ok_or_else(|| missing("kappa"))?;
    let epsilon = args.epsilon.or(section.map(|s| s.epsilon)).unwrap_or(0.0);
    let grid = args.grid.or(section.map(|s| s.grid)).unwrap_or(41);
    let family = SweepFamily::parse(&family_spec, &problem)?;
    let result = cutoff_sweep(&problem, |k| family.set(k), kappa, epsilon, grid)?;
    let csv = sweep_csv(&result)?;
    Ok(SweepOutput { result, csv })
}

pub struct SimulateOutput {
    pub document: SimulationDocument,
    pub rendered: String,
}

/// `--seed`, then the environment (resolved by the caller), then the
/// document, then [`DEFAULT_SEED`].
fn resolve_seed(cli: Option<u64>, doc: Option<u64>) -> u64 {
    cli.or(doc).unwrap_or(DEFAULT_SEED)
}

fn sim_config(path: &Path, problem: &InferenceProblem, doc: &ProblemDocument, seed: u64) -> Result<SimConfig> {
    let sim = doc.simulation.clone().unwrap_or_default();
    let true_beta = match &sim.true_beta {
        Some(b) => DVector::from_column_slice(b),
        None => problem.estimates.values().clone(),
    };
    let n_accepted = sim.n_accepted.unwrap_or(DEFAULT_N_ACCEPTED);
    let cfg = SimConfig {
        true_beta,
        covariance: problem.covariance.clone(),
        deviation: problem.deviation.clone(),
        target: problem.target.clone(),
        alpha: problem.alpha,
        n_accepted,
        seed,
        max_total_draws: sim.max_total_draws.unwrap_or(n_accepted.saturating_mul(1000)),
    };
    cfg.validate().map_err(|e| Error::Document {
        path: format!("{}: simulation", path.display()),
        message: e.to_string(),
    })?;
    Ok(cfg)
}

fn meta_distribution(spec: &super::document::MetaSpec) -> Result<Mixture> {
    let mut comps: Vec<(f64, Box<dyn StudyDistribution>)> = Vec::with_capacity(spec.components.len());
    for (i, c) in spec.components.iter().enumerate() {
        let d = BivariateStudies::new(c.rho, c.kind, c.threshold, (c.pre[0], c.pre[1]), (c.post[0], c.post[1]))
            .map_err(|e| Error::Document {
                path: format!("simulation.meta.components[{i}]"),
                message: e.to_string(),
            })?;
        comps.push((c.weight, Box::new(d)));
    }
    Mixture::new(comps)
}

fn json<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

fn summary_table(mode: SimMode, seed: u64, summary: &serde_json::Value) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "mode  {}", mode.name());
    let _ = writeln!(s, "seed  {seed}");
    flatten_into(&mut s, "", summary);
    s
}

fn flatten_into(out: &mut String, key: &str, v: &serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, child) in m {
                let name = if key.is_empty() { k.clone() } else { format!("{key}.{k}") };
                flatten_into(out, &name, child);
            }
        }
        serde_json::Value::Array(a) => {
            for (i, child) in a.iter().enumerate() {
                flatten_into(out, &format!("{key}[{i}]"), child);
            }
        }
        other => {
            let _ = writeln!(out, "{key:<40} {other}");
        }
    }
}

/// Monte Carlo checks configured by the `[simulation]` table of `path`.
pub fn cmd_simulate(path: &Path, mode: SimMode, seed: Option<u64>, format: OutputFormat) -> Result<SimulateOutput> {
    let (bytes, summary, seed) = match mode {
        SimMode::Coverage | SimMode::Pivot | SimMode::Median => {
            let (bytes, doc) = load_document(path)?;
            let problem = doc.to_problem().map_err(|e| prefix(path, e))?;
            let seed = resolve_seed(seed, doc.simulation.as_ref().and_then(|s| s.seed));
            let cfg = sim_config(path, &problem, &doc, seed)?;
            let summary = match mode {
                SimMode::Coverage => serde_json::json!({
                    "conditional": json(&coverage_estimate(&cfg, Procedure::Conditional)?)?,
                    "conventional": json(&coverage_estimate(&cfg, Procedure::Conventional)?)?,
                }),
                SimMode::Pivot => serde_json::json!({
                    "conditional": json(&pivot_uniformity(&cfg, Procedure::Conditional)?)?,
                    "conventional": json(&pivot_uniformity(&cfg, Procedure::Conventional)?)?,
                }),
                _ => serde_json::json!({
                    "conditional": json(&median_bias(&cfg, Procedure::Conditional)?)?,
                    "conventional": json(&median_bias(&cfg, Procedure::Conventional)?)?,
                }),
            };
            (bytes, summary, seed)
        }
        SimMode::Meta => {
            let (bytes, alpha, sim) = load_simulation_only(path)?;
            let seed = resolve_seed(seed, sim.seed);
            let spec = sim.meta.ok_or_else(|| Error::Document {
                path: format!("{}: simulation.meta", path.display()),
                message: "missing; --mode meta needs a [simulation.meta] table".into(),
            })?;
            let stop = match (spec.deviations, spec.studies) {
                (Some(target), max) => MetaStop::Deviations {
                    target,
                    max_studies: max.unwrap_or(target.saturating_mul(1000)),
                },
                (None, Some(n)) => MetaStop::Studies(n),
                (None, None) => MetaStop::Deviations {
                    target: 20_000,
                    max_studies: 20_000_000,
                },
            };
            let dist = meta_distribution(&spec).map_err(|e| prefix(path, e))?;
            let cond = meta_study_sim(&dist, stop, Procedure::Conditional, alpha, seed)?;
            let conv = meta_study_sim(&dist, stop, Procedure::Conventional, alpha, seed)?;
            (bytes, serde_json::json!({ "conditional": json(&cond)?, "conventional": json(&conv)? }), seed)
        }
        SimMode::Asymptotics => {
            let (bytes, alpha, sim) = load_simulation_only(path)?;
            let seed = resolve_seed(seed, sim.seed);
            let cfg = sim.asymptotics.unwrap_or_default().config(alpha, seed);
            (bytes, json(&plugin_asymptotics_sim(&cfg)?)?, seed)
        }
    };
    let document = SimulationDocument::new(mode.name(), &bytes, seed, summary);
    let rendered = match format {
        OutputFormat::Table => summary_table(mode, seed, &document.summary),
        OutputFormat::Machine => document.to_json()? + "\n",
        OutputFormat::Csv => {
            return Err(Error::InvalidParameter(
                "simulate writes table or machine output, not csv".into(),
            ))
        }
    };
    Ok(SimulateOutput { document, rendered })
}

/// Parse and validate without solving; reports the problem's shape and
/// whether the estimates lie in the deviation set.
pub fn cmd_validate(path: &Path) -> Result<String> {
    let (_, doc) = load_document(path)?;
    let problem = doc.to_problem().map_err(|e| prefix(path, e))?;
    problem.check_membership()?;
    let resid = crate::model::residualize(&problem)?;
    let tset = crate::truncation::union_truncation(&problem.deviation, &resid)?;
    let rows: usize = problem.deviation.polyhedra().iter().map(|p| p.rows()).sum();
    let mut s = String::new();
    let _ = writeln!(s, "ok: {}", path.display());
    let _ = writeln!(s, "estimates     {}", problem.estimates.dim());
    let _ = writeln!(
        s,
        "deviation     {} polyhedra, {rows} rows ({})",
        problem.deviation.polyhedra().len(),
        problem.deviation.provenance()
    );
    let _ = writeln!(s, "truncation    {tset}");
    Ok(s)
}

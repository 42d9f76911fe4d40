//! JSON reports and CSV tables.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::inference::{Diagnostics, InferenceReport, QuantileSolution};
use crate::sensitivity::SweepResult;
use crate::truncation::{ExtendedInterval, TruncationSet};

pub const ENGINE: &str = "condinf";
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A double that may be infinite. Finite values are JSON numbers, the rest
/// the strings `"inf"`, `"-inf"`, `"nan"`.
#[derive(Debug, Clone, Copy)]
pub struct Real(pub f64);

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits() || (self.0.is_nan() && other.0.is_nan())
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                match v {
                    "inf" => Ok(Real(f64::INFINITY)),
                    "-inf" => Ok(Real(f64::NEG_INFINITY)),
                    "nan" => Ok(Real(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn pair(iv: &ExtendedInterval) -> [Real; 2] {
    [Real(iv.lo()), Real(iv.hi())]
}

fn interval(p: [Real; 2]) -> Result<ExtendedInterval> {
    ExtendedInterval::new(p[0].0, p[1].0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDocument {
    pub value: Real,
    pub iterations: u32,
    pub residual: Real,
    pub bracket_width: Real,
}

impl From<&QuantileSolution> for SolveDocument {
    fn from(q: &QuantileSolution) -> Self {
        Self {
            value: Real(q.value),
            iterations: q.iterations,
            residual: Real(q.residual),
            bracket_width: Real(q.bracket_width),
        }
    }
}

impl SolveDocument {
    fn solution(&self) -> QuantileSolution {
        QuantileSolution {
            value: self.value.0,
            iterations: self.iterations,
            residual: self.residual.0,
            bracket_width: self.bracket_width.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsDocument {
    pub lower: SolveDocument,
    pub point: SolveDocument,
    pub upper: SolveDocument,
    pub slacks: Vec<Vec<Real>>,
    pub boundary_distance: Real,
}

/// Machine-readable inference report with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub engine: String,
    pub engine_version: String,
    /// SHA-256 of the input file, hex encoded.
    pub input_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub deviation: String,
    pub alpha: Real,
    pub sigma_post: Real,
    pub corrected_ci: [Real; 2],
    pub corrected_point: Real,
    pub conventional_ci: [Real; 2],
    pub conventional_point: Real,
    pub truncation: Vec<[Real; 2]>,
    pub diagnostics: DiagnosticsDocument,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ReportDocument {
    pub fn new(report: &InferenceReport, deviation: &str, input: &[u8], seed: Option<u64>) -> Self {
        let d = &report.diagnostics;
        Self {
            engine: ENGINE.into(),
            engine_version: ENGINE_VERSION.into(),
            input_sha256: sha256_hex(input),
            seed,
            deviation: deviation.into(),
            alpha: Real(report.alpha),
            sigma_post: Real(report.sigma_post),
            corrected_ci: pair(&report.corrected_ci),
            corrected_point: Real(report.corrected_point),
            conventional_ci: pair(&report.conventional_ci),
            conventional_point: Real(report.conventional_point),
            truncation: report.truncation.intervals().iter().map(pair).collect(),
            diagnostics: DiagnosticsDocument {
                lower: (&d.lower).into(),
                point: (&d.point).into(),
                upper: (&d.upper).into(),
                slacks: d.slacks.iter().map(|s| s.iter().map(|v| Real(*v)).collect()).collect(),
                boundary_distance: Real(d.boundary_distance),
            },
        }
    }

    /// Rebuild the in-memory report.
    pub fn report(&self) -> Result<InferenceReport> {
        let d = &self.diagnostics;
        Ok(InferenceReport {
            corrected_ci: interval(self.corrected_ci)?,
            corrected_point: self.corrected_point.0,
            conventional_ci: interval(self.conventional_ci)?,
            conventional_point: self.conventional_point.0,
            truncation: TruncationSet::from_intervals(
                self.truncation.iter().map(|p| interval(*p)).collect::<Result<_>>()?,
            ),
            alpha: self.alpha.0,
            sigma_post: self.sigma_post.0,
            diagnostics: Diagnostics {
                lower: d.lower.solution(),
                point: d.point.solution(),
                upper: d.upper.solution(),
                slacks: d.slacks.iter().map(|s| s.iter().map(|v| v.0).collect()).collect(),
                boundary_distance: d.boundary_distance.0,
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// 17 significant digits, enough to round-trip any double.
pub fn format_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub const SWEEP_HEADER: [&str; 5] = ["kappa", "ci_lo", "ci_hi", "point", "member"];

/// One CSV row per grid point. Rows with no report leave the interval and
/// point fields empty.
pub fn sweep_csv(sweep: &SweepResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER)?;
    for row in &sweep.rows {
        let (lo, hi, point) = match &row.report {
            Some(r) => (
                format_real(r.corrected_ci.lo()),
                format_real(r.corrected_ci.hi()),
                format_real(r.corrected_point),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let member = row.member.to_string();
        w.write_record([format_real(row.kappa), lo, hi, point, member])?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Summary of a `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationDocument {
    pub engine: String,
    pub engine_version: String,
    pub input_sha256: String,
    pub seed: u64,
    pub mode: String,
    pub summary: serde_json::Value,
}

impl SimulationDocument {
    pub fn new(mode: &str, input: &[u8], seed: u64, summary: serde_json::Value) -> Self {
        Self {
            engine: ENGINE.into(),
            engine_version: ENGINE_VERSION.into(),
            input_sha256: sha256_hex(input),
            seed,
            mode: mode.into(),
            summary,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

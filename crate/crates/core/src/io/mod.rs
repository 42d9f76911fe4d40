//! Problem documents, reports, and the command-line commands.

mod commands;
mod document;
mod expr;
mod report;

pub use commands::{
    cmd_correct, cmd_simulate, cmd_sweep, cmd_validate, CorrectOutput, OutputFormat, SimMode, SimulateOutput,
    SweepArgs, SweepFamily, SweepOutput, DEFAULT_N_ACCEPTED, DEFAULT_SEED, SEED_ENV,
};
pub use document::{
    default_labels, load_document, parse_problem, AsymptoticsSpec, BessonePart, CovarianceSpec, DeviationSpec,
    EstimatesSpec, MetaComponentSpec, MetaSpec, PolyhedronSpec, ProblemDocument, SelectorSpec, SimulationSpec,
    SweepSpec, DEFAULT_ALPHA,
};
pub use expr::parse_selector;
pub use report::{
    format_real, sha256_hex, sweep_csv, DiagnosticsDocument, ReportDocument, Real, SimulationDocument, SolveDocument,
    ENGINE, ENGINE_VERSION, SWEEP_HEADER,
};

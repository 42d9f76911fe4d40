//! Read a problem document, correct it, and print the JSON report.

use condinf::inference::correct_report;
use condinf::io::{load_document, ReportDocument};

fn main() -> condinf::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/one_sided.toml").to_string());
    let (bytes, doc) = load_document(path.as_ref())?;
    let problem = doc.to_problem()?;
    problem.check_membership()?;
    let report = correct_report(&problem)?;
    let out = ReportDocument::new(&report, problem.deviation.provenance(), &bytes, None);
    println!("{}", out.to_json()?);
    Ok(())
}

// Two reporting rules: the positive-significant cell and the
// negative-significant cell. Inference conditions only on the cell the data hit.

use condinf::builders::{threshold_set, CutoffKind};
use condinf::model::{CovarianceMatrix, EstimateVector, InferenceProblem, Selector};
use condinf::sensitivity::local_report;

fn main() -> condinf::Result<()> {
    let cov = CovarianceMatrix::from_row_slice(2, &[1.0, 0.7, 0.7, 1.0])?;
    let pre = Selector::unit(2, 0)?;
    let cells = [
        threshold_set(&pre, CutoffKind::OneSidedAbove, 1.96)?,
        threshold_set(&pre, CutoffKind::OneSidedBelow, 1.96)?,
    ];
    for x in [[2.5, 1.0], [-2.2, -0.4]] {
        let problem = InferenceProblem::new(
            EstimateVector::from_slice(&x)?,
            cov.clone(),
            Selector::unit(2, 1)?,
            cells[0].clone(),
            0.05,
        )?;
        let local = local_report(&problem, &cells)?;
        let ci = local.report.corrected_ci;
        println!("x = {x:?}: cell {} -> [{:.3}, {:.3}]", local.cell, ci.lo(), ci.hi());
        for w in &local.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}

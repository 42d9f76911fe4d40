//! Correct a post estimate reported only because the pre estimate was
//! significant in either direction.

use condinf::builders::{cutoff_set, CutoffKind, CutoffSpec};
use condinf::inference::correct_report;
use condinf::model::{CovarianceMatrix, EstimateVector, InferenceProblem, Selector};

fn main() -> condinf::Result<()> {
    let cov = CovarianceMatrix::from_row_slice(2, &[1.0, 0.5, 0.5, 1.0])?;
    let rule = CutoffSpec::statistical(Selector::unit(2, 0)?, CutoffKind::TwoSidedSignificant, 0.05)?;
    let deviation = cutoff_set(&rule, &cov)?;

    println!("{:>6} {:>22} {:>22}", "pre", "corrected", "conventional");
    for pre in [-3.0, -2.1, 2.0, 2.5, 4.0] {
        let problem = InferenceProblem::new(
            EstimateVector::from_slice(&[pre, 0.3])?,
            cov.clone(),
            Selector::unit(2, 1)?,
            deviation.clone(),
            0.05,
        )?;
        let r = correct_report(&problem)?;
        println!(
            "{pre:>6.2} [{:>8.3}, {:>8.3}] [{:>8.3}, {:>8.3}]",
            r.corrected_ci.lo(),
            r.corrected_ci.hi(),
            r.conventional_ci.lo(),
            r.conventional_ci.hi()
        );
    }
    Ok(())
}

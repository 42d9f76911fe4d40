//! How far the corrected interval moves from the conventional one as the
//! pre estimate moves away from a one-sided cutoff.

use condinf::builders::{threshold_set, CutoffKind};
use condinf::inference::correct_report;
use condinf::model::{CovarianceMatrix, EstimateVector, InferenceProblem, Selector};

fn main() -> condinf::Result<()> {
    let rho = 0.5;
    let cov = CovarianceMatrix::from_row_slice(2, &[1.0, rho, rho, 1.0])?;
    let cutoff = 1.96;
    let set = threshold_set(&Selector::unit(2, 0)?, CutoffKind::OneSidedAbove, cutoff)?;

    println!("distance  gap_lo     gap_hi     point_shift");
    for step in 0..12 {
        let dist = 0.05 + 0.3 * step as f64;
        let problem = InferenceProblem::new(
            EstimateVector::from_slice(&[cutoff + dist, 0.0])?,
            cov.clone(),
            Selector::unit(2, 1)?,
            set.clone(),
            0.05,
        )?;
        let r = correct_report(&problem)?;
        println!(
            "{dist:<8.2}  {:<9.2e}  {:<9.2e}  {:.2e}",
            r.corrected_ci.lo() - r.conventional_ci.lo(),
            r.corrected_ci.hi() - r.conventional_ci.hi(),
            r.corrected_point - r.conventional_point,
        );
    }
    Ok(())
}

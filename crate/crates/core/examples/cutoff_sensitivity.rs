//! Sweep the cutoff around the reported one and find how far it can move
//! before the interval stops excluding zero.

use condinf::builders::{threshold_set, CutoffKind};
use condinf::model::{CovarianceMatrix, EstimateVector, InferenceProblem, Selector};
use condinf::sensitivity::{breakdown_epsilon, cutoff_sweep, excludes, BreakdownOptions};

fn main() -> condinf::Result<()> {
    let cov = CovarianceMatrix::from_row_slice(2, &[1.0, 0.25, 0.25, 1.0])?;
    let pre = Selector::unit(2, 0)?;
    let family = |k: f64| threshold_set(&pre, CutoffKind::OneSidedAbove, k);
    let kappa = 1.96;
    let problem = InferenceProblem::new(
        EstimateVector::from_slice(&[2.2, 4.5])?,
        cov,
        Selector::unit(2, 1)?,
        family(kappa)?,
        0.05,
    )?;

    let sweep = cutoff_sweep(&problem, family, kappa, 0.5, 11)?;
    for row in &sweep.rows {
        match row.corrected_ci() {
            Some(ci) => println!("kappa {:.3}: [{:.3}, {:.3}]", row.kappa, ci.lo(), ci.hi()),
            None => println!("kappa {:.3}: data not in the set", row.kappa),
        }
    }

    let b = breakdown_epsilon(&problem, family, kappa, excludes(0.0), &BreakdownOptions::default())?;
    if b.unbounded {
        println!("zero stays excluded for every cutoff within {}", b.epsilon);
    } else {
        println!("breakdown at epsilon = {:.4}", b.epsilon);
    }
    Ok(())
}

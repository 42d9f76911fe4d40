//! Pooled nap estimate reported after the interaction and night-sleep
//! tests came out the "right" way.

use condinf::builders::{bessone_sets, BessoneArms, BessoneEta};
use condinf::inference::correct_report;
use condinf::model::{CovarianceMatrix, EstimateVector, InferenceProblem, Selector};

fn main() -> condinf::Result<()> {
    let labels: Vec<String> = ["n", "ne", "ni", "e", "i"].iter().map(|s| s.to_string()).collect();
    let x = EstimateVector::new(vec![0.12, 0.10, 0.15, 0.03, 0.02].into(), labels.clone())?;
    let cov = CovarianceMatrix::from_row_slice(
        5,
        &[
            0.0016, 0.0004, 0.0004, 0.0002, 0.0002, //
            0.0004, 0.0025, 0.0005, 0.0006, 0.0003, //
            0.0004, 0.0005, 0.0025, 0.0003, 0.0006, //
            0.0002, 0.0006, 0.0003, 0.0016, 0.0004, //
            0.0002, 0.0003, 0.0006, 0.0004, 0.0016,
        ],
    )?;
    let arms = BessoneArms::from_labels(&labels, ["n", "ne", "ni", "e", "i"])?;
    let sets = bessone_sets(&arms, &BessoneEta::uniform(0.05), &cov)?;

    for (name, set) in [
        ("power", sets.power.clone()),
        ("interpretability", sets.interpretability.clone()),
        ("economic", sets.economic.clone()),
        ("all three", sets.combined()?),
    ] {
        let problem = InferenceProblem::new(x.clone(), cov.clone(), Selector::unit(5, 0)?, set, 0.05)?;
        let r = correct_report(&problem)?;
        println!(
            "{name:<17} point {:.4}  ci [{:.4}, {:.4}]  (conventional [{:.4}, {:.4}])",
            r.corrected_point,
            r.corrected_ci.lo(),
            r.corrected_ci.hi(),
            r.conventional_ci.lo(),
            r.conventional_ci.hi()
        );
    }
    Ok(())
}

//! Average coverage over a population of studies that each deviate by
//! their own rule.

use condinf::builders::CutoffKind;
use condinf::sim::{meta_study_sim, BivariateStudies, MetaStop, Mixture, Procedure, StudyDistribution};

fn main() -> condinf::Result<()> {
    let comps: Vec<(f64, Box<dyn StudyDistribution>)> = vec![
        (2.0, Box::new(BivariateStudies::new(0.9, CutoffKind::TwoSidedSignificant, 0.05, (0.0, 1.5), (0.0, 1.0))?)),
        (1.0, Box::new(BivariateStudies::new(0.3, CutoffKind::OneSidedAbove, 0.025, (1.0, 1.0), (0.5, 0.5))?)),
        (1.0, Box::new(BivariateStudies::new(-0.6, CutoffKind::EconomicAbove, 0.5, (0.0, 1.0), (0.0, 2.0))?)),
    ];
    let population = Mixture::new(comps)?;
    let stop = MetaStop::Deviations {
        target: 10_000,
        max_studies: 1_000_000,
    };
    for procedure in [Procedure::Conditional, Procedure::Conventional] {
        let r = meta_study_sim(&population, stop, procedure, 0.05, 5)?;
        println!(
            "{procedure:?}: ACR {:.4} over {} deviating of {} studies",
            r.acr.estimate, r.deviations, r.studies
        );
    }
    Ok(())
}

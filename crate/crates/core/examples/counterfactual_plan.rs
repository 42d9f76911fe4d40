//! When would a planner who had seen the data have pooled two arms?

use condinf::builders::{counterfactual_deviates, counterfactual_threshold, posterior_average_risk};

fn main() -> condinf::Result<()> {
    let (sigma2, v2) = (0.01, 0.02);
    let t = counterfactual_threshold(sigma2 / v2)?;
    println!("pool when |tau2 - tau1| / sqrt(2 sigma^2) <= {t:.4}");

    for (tau1, tau2) in [(0.10, 0.11), (0.10, 0.16), (0.10, 0.30)] {
        let pool = counterfactual_deviates(tau1, tau2, sigma2, v2)?;
        let keep = posterior_average_risk(1.0, tau1, tau2, sigma2, v2);
        let half = posterior_average_risk(0.5, tau1, tau2, sigma2, v2);
        println!("tau = ({tau1}, {tau2}): pool {pool}  risk unpooled {keep:.5} pooled {half:.5}");
    }
    Ok(())
}

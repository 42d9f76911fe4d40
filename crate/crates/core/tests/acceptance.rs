//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use condinf::builders::{
    counterfactual_deviates, cutoff_set, threshold_set, CutoffKind, CutoffSpec,
};
use condinf::inference::{correct_estimates, que_solve, SolverOptions};
use condinf::model::{
    deviation_membership, CovarianceMatrix, DeviationSet, EstimateVector, InferenceProblem, Polyhedron,
    Residualization, Selector,
};
use condinf::sensitivity::cutoff_sweep;
use condinf::sim::{
    evaluate_draws, meta_study_sim, plugin_asymptotics_sim, simulate_conditional, BivariateStudies, ErrorLaw,
    MetaStop, Mixture, PluginConfig, Procedure, SimConfig, StudyDistribution,
};
use condinf::truncation::{truncation_contains, union_truncation};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn z(p: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

fn cov2(rho: f64) -> CovarianceMatrix {
    CovarianceMatrix::from_row_slice(2, &[1.0, rho, rho, 1.0]).unwrap()
}

fn e(d: usize, i: usize) -> Selector {
    Selector::unit(d, i).unwrap()
}

fn binom_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn random_cov(rng: &mut ChaCha8Rng, d: usize) -> CovarianceMatrix {
    let b = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let m = &b * b.transpose() + DMatrix::identity(d, d) * 0.1;
    let m = (&m + m.transpose()) * 0.5;
    CovarianceMatrix::new(m).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn criterion_1() -> Outcome {
    let n = 100_000u64;
    let (mismatches, members) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(1_000_003 * i + 17);
            let d = rng.random_range(2..=5);
            let k = rng.random_range(1..=3);
            let x = random_vec(&mut rng, d);
            let cov = random_cov(&mut rng, d);
            let mut l = random_vec(&mut rng, d);
            if l.norm() < 1e-3 {
                l[0] += 1.0;
            }
            let polys = (0..k)
                .map(|_| {
                    let m = rng.random_range(1..=4);
                    let a = DMatrix::from_fn(m, d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let noise = DVector::from_fn(m, |_, _| 0.6 * rng.sample::<f64, _>(StandardNormal) + 0.3);
                    let c = &a * &x + noise;
                    Polyhedron::new(a, c).unwrap()
                })
                .collect();
            let set = DeviationSet::new(polys, "").unwrap();
            let target = Selector::new(l).unwrap();
            let resid = Residualization::compute(&x, &cov, &target).unwrap();
            let tset = union_truncation(&set, &resid).unwrap();
            let member = deviation_membership(&set, &x).unwrap();
            let in_t = truncation_contains(&tset, resid.observed);
            (u64::from(member != in_t), u64::from(member))
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    outcome(
        mismatches == 0,
        format!("{mismatches} mismatches in {n} instances ({members} members)"),
    )
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for &sigma in &[1.0, 0.3, 7.5] {
        for &obs in &[0.0, -2.5, 13.0] {
            for &alpha in &[0.005, 0.025, 0.5, 0.975, 0.995] {
                let full = condinf::truncation::TruncationSet::full();
                let mu = que_solve(obs, sigma, &full, alpha).unwrap();
                let expect = obs + z(alpha) * sigma;
                worst = worst.max((mu - expect).abs() / sigma);
            }
        }
    }
    outcome(worst <= 1e-8, format!("max |mu* - (x + z_a sigma)| = {worst:.2e} sigma"))
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let kinds = [
        CutoffKind::TwoSidedSignificant,
        CutoffKind::TwoSidedInsignificant,
        CutoffKind::OneSidedAbove,
        CutoffKind::OneSidedBelow,
    ];
    let mut trials = 0;
    for i in 0..400 {
        // pre estimates 0, 1 are correlated with each other but not with the target 2
        let rho: f64 = rng.random_range(-0.9..0.9);
        let s2: f64 = rng.random_range(0.2..3.0);
        let cov = CovarianceMatrix::from_row_slice(3, &[1.0, rho, 0.0, rho, 1.0, 0.0, 0.0, 0.0, s2]).unwrap();
        let x = random_vec(&mut rng, 3) * 2.0;
        let kind = kinds[i % 4];
        let v = Selector::from_slice(&[1.0, rng.random_range(-1.0..1.0), 0.0]).unwrap();
        let set = cutoff_set(&CutoffSpec::statistical(v, kind, 0.1).unwrap(), &cov).unwrap();
        if !set.contains(&x).unwrap() {
            continue;
        }
        trials += 1;
        let r = correct_estimates(&x, &cov, &e(3, 2), &set, 0.05, &SolverOptions::default()).unwrap();
        worst = worst.max(r.endpoint_gap() / r.sigma_post);
        worst = worst.max((r.corrected_point - r.conventional_point).abs() / r.sigma_post);
    }
    outcome(
        worst <= 1e-8 && trials > 100,
        format!("max corrected vs conventional gap {worst:.2e} sigma over {trials} problems"),
    )
}

struct GridCase {
    rho: f64,
    two_sided: bool,
    seed: u64,
}

fn grid() -> Vec<GridCase> {
    let mut v = Vec::new();
    let mut seed = 400;
    for rho in [0.25, 0.5, 0.9] {
        for two_sided in [false, true] {
            seed += 1;
            v.push(GridCase { rho, two_sided, seed });
        }
    }
    v
}

fn grid_config(c: &GridCase, n: u64) -> SimConfig {
    let cov = cov2(c.rho);
    let kind = if c.two_sided {
        CutoffKind::TwoSidedSignificant
    } else {
        CutoffKind::OneSidedAbove
    };
    SimConfig {
        true_beta: DVector::from_column_slice(&[0.5, 0.2]),
        deviation: cutoff_set(&CutoffSpec::statistical(e(2, 0), kind, 0.05).unwrap(), &cov).unwrap(),
        covariance: cov,
        target: e(2, 1),
        alpha: 0.05,
        n_accepted: n,
        seed: c.seed,
        max_total_draws: 1000 * n,
    }
}

struct GridResults {
    rows: Vec<(String, condinf::sim::DrawSummary)>,
}

fn run_grid() -> GridResults {
    let rows = grid()
        .iter()
        .map(|c| {
            let label = format!("rho={} {}", c.rho, if c.two_sided { "two-sided" } else { "one-sided" });
            (label, evaluate_draws(&grid_config(c, 100_000)).unwrap())
        })
        .collect();
    GridResults { rows }
}

fn criterion_4(g: &GridResults) -> Outcome {
    let worst = g
        .rows
        .iter()
        .map(|(l, s)| (l, s.conditional_pivot.p_value))
        .fold((String::new(), f64::INFINITY), |acc, (l, p)| if p < acc.1 { (l.clone(), p) } else { acc });
    outcome(worst.1 > 0.01, format!("min KS p-value {:.4} ({})", worst.1, worst.0))
}

fn criterion_5(g: &GridResults) -> Outcome {
    let worst = g
        .rows
        .iter()
        .map(|(l, s)| (l.clone(), s.conditional_coverage.estimate))
        .fold((String::new(), 0.95), |acc, (l, c)| {
            if (c - 0.95).abs() > (acc.1 - 0.95f64).abs() {
                (l, c)
            } else {
                acc
            }
        });
    let conditional_ok = g.rows.iter().all(|(_, s)| (s.conditional_coverage.estimate - 0.95).abs() <= 0.006);

    // conventional interval, rho = 0.5, event pre >= 0, beta = 0
    let cov = cov2(0.5);
    let n = 100_000;
    let cfg = SimConfig {
        true_beta: DVector::zeros(2),
        deviation: threshold_set(&e(2, 0), CutoffKind::EconomicAbove, 0.0).unwrap(),
        covariance: cov,
        target: e(2, 1),
        alpha: 0.05,
        n_accepted: n,
        seed: 55,
        max_total_draws: 100 * n,
    };
    let s = evaluate_draws(&cfg).unwrap();
    let conv = s.conventional_coverage.estimate;
    let limit = 0.95 - 3.0 * binom_se(0.95, n);
    let conventional_ok = conv < limit;
    outcome(
        conditional_ok && conventional_ok,
        format!(
            "conditional worst {:.4} ({}), conventional at rho=0.5, pre>=0, beta=0: {conv:.4} (needs < {limit:.4})",
            worst.1, worst.0
        ),
    )
}

fn criterion_6(g: &GridResults) -> Outcome {
    let ok = g.rows.iter().all(|(_, s)| (s.conditional_median.estimate - 0.5).abs() <= 0.006);
    let worst = g
        .rows
        .iter()
        .map(|(_, s)| (s.conditional_median.estimate - 0.5).abs())
        .fold(0.0, f64::max);
    outcome(ok, format!("max |P(point >= truth) - 0.5| = {worst:.4}"))
}

/// Largest endpoint gap over 1000 accepted draws when the event is
/// `pre >= kappa` with `P(event) = 1 - 1e-6`.
fn prop2_max_gap(rho: f64) -> f64 {
    let cov = cov2(rho);
    let kappa = z(1e-6);
    let deviation = threshold_set(&e(2, 0), CutoffKind::EconomicAbove, kappa).unwrap();
    let cfg = SimConfig {
        true_beta: DVector::zeros(2),
        deviation: deviation.clone(),
        covariance: cov.clone(),
        target: e(2, 1),
        alpha: 0.05,
        n_accepted: 1000,
        seed: 77,
        max_total_draws: 10_000,
    };
    let draws = simulate_conditional(&cfg).unwrap();
    draws
        .draws
        .iter()
        .map(|x| {
            let r = correct_estimates(x, &cov, &e(2, 1), &deviation, 0.05, &SolverOptions::default()).unwrap();
            r.endpoint_gap() / r.sigma_post
        })
        .fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let [g25, g50, g90] = [0.25, 0.5, 0.9].map(prop2_max_gap);
    outcome(
        g50 <= 1e-3,
        format!("max endpoint gap over 1000 draws at rho=0.5: {g50:.2e} sigma (rho=0.25: {g25:.2e}, rho=0.9: {g90:.2e})"),
    )
}

fn criterion_8() -> Outcome {
    let cov = cov2(0.5);
    let cut = 1.96;
    let deviation = threshold_set(&e(2, 0), CutoffKind::OneSidedAbove, cut).unwrap();
    let dists: Vec<f64> = (0..20).map(|i| 0.05 + i as f64 * (3.5 - 0.05) / 19.0).collect();
    let gaps: Vec<f64> = dists
        .iter()
        .map(|d| {
            let x = DVector::from_column_slice(&[cut + d, 0.0]);
            let r = correct_estimates(&x, &cov, &e(2, 1), &deviation, 0.05, &SolverOptions::default()).unwrap();
            r.endpoint_gap() / r.sigma_post
        })
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let far_ok = dists.iter().zip(&gaps).filter(|(d, _)| **d > 3.0).all(|(_, g)| *g <= 0.01);
    let far_max = dists.iter().zip(&gaps).filter(|(d, _)| **d > 3.0).map(|(_, g)| *g).fold(0.0, f64::max);
    outcome(
        monotone && far_ok,
        format!(
            "gap {:.3} at distance {:.2} down to {:.2e} at {:.2}; strictly decreasing: {monotone}; max beyond 3 sd {far_max:.2e}",
            gaps[0], dists[0], gaps[19], dists[19]
        ),
    )
}

fn criterion_9() -> Outcome {
    let cov = cov2(0.25);
    let problem = InferenceProblem::new(
        EstimateVector::from_slice(&[2.2, 2.3]).unwrap(),
        cov.clone(),
        e(2, 1),
        threshold_set(&e(2, 0), CutoffKind::OneSidedAbove, 1.96).unwrap(),
        0.05,
    )
    .unwrap();
    let family = |k: f64| threshold_set(&e(2, 0), CutoffKind::OneSidedAbove, k);
    let sweep = cutoff_sweep(&problem, family, 1.96, 0.5, 41).unwrap();
    let status: Vec<(f64, bool)> = sweep
        .rows
        .iter()
        .filter_map(|r| r.corrected_ci().map(|ci| (r.kappa, ci.contains(0.0))))
        .collect();
    let flip = status.windows(2).find(|w| w[0].1 != w[1].1).map(|w| (w[0].0, w[1].0));
    outcome(
        flip.is_some(),
        match flip {
            Some((a, b)) => format!("zero inclusion flips between kappa = {a:.4} and {b:.4}"),
            None => "no flip in zero inclusion".into(),
        },
    )
}

fn meta_population() -> Mixture {
    let comps: Vec<(f64, Box<dyn StudyDistribution>)> = vec![
        (
            2.0,
            Box::new(
                BivariateStudies::new(0.9, CutoffKind::TwoSidedSignificant, 0.05, (0.0, 1.5), (0.0, 1.0)).unwrap(),
            ),
        ),
        (
            1.0,
            Box::new(BivariateStudies::new(0.3, CutoffKind::OneSidedAbove, 0.025, (1.0, 1.0), (0.5, 0.5)).unwrap()),
        ),
        (
            1.0,
            Box::new(BivariateStudies::new(-0.6, CutoffKind::EconomicAbove, 0.5, (0.0, 1.0), (0.0, 2.0)).unwrap()),
        ),
        (
            1.0,
            Box::new(
                BivariateStudies::new(0.5, CutoffKind::TwoSidedInsignificant, 0.10, (0.0, 1.0), (1.0, 1.0)).unwrap(),
            ),
        ),
    ];
    Mixture::new(comps).unwrap()
}

fn criterion_10() -> Outcome {
    let dist = meta_population();
    let stop = MetaStop::Deviations {
        target: 20_000,
        max_studies: 2_000_000,
    };
    let cond = meta_study_sim(&dist, stop, Procedure::Conditional, 0.05, 1010).unwrap();
    let conv = meta_study_sim(&dist, stop, Procedure::Conventional, 0.05, 1010).unwrap();
    let ok = (cond.acr.estimate - 0.95).abs() <= 0.01 && conv.acr.estimate < 0.94;
    outcome(
        ok,
        format!(
            "ACR conditional {:.4}, conventional {:.4} over {} deviating studies",
            cond.acr.estimate, conv.acr.estimate, cond.deviations
        ),
    )
}

fn criterion_11() -> Outcome {
    let reps = 5000;
    let cfg = PluginConfig {
        sample_sizes: vec![100, 1600],
        reps,
        errors: ErrorLaw::CenteredExponential,
        seed: 1111,
        ..PluginConfig::default()
    };
    let r = plugin_asymptotics_sim(&cfg).unwrap();
    let c100 = r.rows[0].conditional.estimate;
    let c1600 = r.rows[1].conditional.estimate;
    let noise = 3.0 * (2.0f64).sqrt() * binom_se(0.95, reps);
    let ok = (c1600 - 0.95).abs() <= 0.02 && (c1600 - 0.95).abs() <= (c100 - 0.95).abs() + noise;
    outcome(
        ok,
        format!(
            "conditional coverage n=100: {c100:.4}, n=1600: {c1600:.4} (conventional {:.4}, {:.4})",
            r.rows[0].conventional.estimate, r.rows[1].conventional.estimate
        ),
    )
}

fn criterion_12() -> Outcome {
    let cov = cov2(0.7);
    let t = z(0.975);
    let above = threshold_set(&e(2, 0), CutoffKind::OneSidedAbove, t).unwrap();
    let below = threshold_set(&e(2, 0), CutoffKind::OneSidedBelow, t).unwrap();
    let event = threshold_set(&e(2, 0), CutoffKind::TwoSidedSignificant, t).unwrap();
    let truth = 0.3;
    let n = 100_000;
    let cfg = SimConfig {
        true_beta: DVector::from_column_slice(&[0.4, truth]),
        deviation: event,
        covariance: cov.clone(),
        target: e(2, 1),
        alpha: 0.05,
        n_accepted: n,
        seed: 1212,
        max_total_draws: 1000 * n,
    };
    let draws = simulate_conditional(&cfg).unwrap();
    let hits: u64 = draws
        .draws
        .par_iter()
        .map(|x| {
            let cell = if x[0] >= t { &above } else { &below };
            let r = correct_estimates(x, &cov, &e(2, 1), cell, 0.05, &SolverOptions::default()).unwrap();
            u64::from(r.corrected_ci.contains(truth))
        })
        .sum();
    let cov_rate = hits as f64 / n as f64;
    outcome(cov_rate >= 0.944, format!("pooled per-cell coverage {cov_rate:.4}"))
}

/// `E[D^2]` for `D ~ N(mean, var)` by the trapezoid rule on +-12 sd.
fn second_moment(mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let n = 4000;
    let h = 24.0 * sd / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let x = mean - 12.0 * sd + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let dens = (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        acc += w * x * x * dens;
    }
    acc * h
}

fn criterion_13() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1313);
    let (mut disagree, mut ties) = (0, 0);
    for _ in 0..10_000 {
        let sigma: f64 = rng.random_range(0.05..3.0);
        let v: f64 = rng.random_range(0.05..3.0);
        let m: f64 = rng.random_range(-2.0..2.0);
        let spread = 3.0 * (2.0 * (sigma * sigma + v * v)).sqrt();
        let t1 = m + rng.random_range(-spread..spread);
        let t2 = m + rng.random_range(-spread..spread);
        let (s2, v2) = (sigma * sigma, v * v);
        // posterior of tau_k is N(m + b (t_k - m), b s2) independently, b = v2 / (v2 + s2)
        let b = v2 / (v2 + s2);
        let gap2 = second_moment(b * (t2 - t1), 2.0 * b * s2);
        // frequentist MSE of w t1 + (1 - w) t2 for tau1, averaged over the posterior
        let risk = |w: f64| (1.0 - w).powi(2) * gap2 + s2 * (w * w + (1.0 - w).powi(2));
        let diff = risk(0.5) - risk(1.0);
        if diff.abs() <= 1e-9 * s2 {
            ties += 1;
            continue;
        }
        let numeric = diff < 0.0;
        if numeric != counterfactual_deviates(t1, t2, s2, v2).unwrap() {
            disagree += 1;
        }
    }
    outcome(
        disagree == 0,
        format!("{disagree} disagreements in 10000 tuples ({ties} inside the tie band)"),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut run = |id: u32, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "criterion {id:>2}: {} ({}; {:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((id, o));
    };
    run(1, &criterion_1);
    run(2, &criterion_2);
    run(3, &criterion_3);
    let grid = run_grid();
    run(4, &|| criterion_4(&grid));
    run(5, &|| criterion_5(&grid));
    run(6, &|| criterion_6(&grid));
    run(7, &criterion_7);
    run(8, &criterion_8);
    run(9, &criterion_9);
    run(10, &criterion_10);
    run(11, &criterion_11);
    run(12, &criterion_12);
    run(13, &criterion_13);
    let failed: Vec<u32> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}

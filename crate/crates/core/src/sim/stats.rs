use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{check_probability, Error, Result};

/// Binomial proportion with an exact two-sided confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Level of `[ci_lo, ci_hi]`.
    pub confidence: f64,
}

impl Proportion {
    pub fn new(successes: u64, trials: u64, confidence: f64) -> Result<Self> {
        let (ci_lo, ci_hi) = clopper_pearson(successes, trials, confidence)?;
        Ok(Self {
            successes,
            trials,
            estimate: successes as f64 / trials as f64,
            ci_lo,
            ci_hi,
            confidence,
        })
    }

    /// Binomial standard error at a hypothesized rate `p`.
    pub fn standard_error_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Clopper-Pearson interval for `successes` out of `trials`.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    check_probability("confidence", confidence)?;
    if trials == 0 || successes > trials {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= successes ({successes}) <= trials ({trials}) and trials > 0"
        )));
    }
    let tail = (1.0 - confidence) / 2.0;
    let (k, n) = (successes as f64, trials as f64);
    let beta = |a: f64, b: f64| Beta::new(a, b).map_err(|e| Error::InvalidParameter(e.to_string()));
    let lo = if successes == 0 {
        0.0
    } else {
        beta(k, n - k + 1.0)?.inverse_cdf(tail)
    };
    let hi = if successes == trials {
        1.0
    } else {
        beta(k + 1.0, n - k)?.inverse_cdf(1.0 - tail)
    };
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test against `U(0, 1)`.
///
/// The p-value uses the asymptotic Kolmogorov distribution with Stephens'
/// small-sample correction.
pub fn ks_uniform(sample: &[f64]) -> Result<KsResult> {
    if sample.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    if sample.iter().any(|u| u.is_nan()) {
        return Err(Error::NotFinite("KS sample"));
    }
    let mut u = sample.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d),
        n: u.len(),
    })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

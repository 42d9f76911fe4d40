//! CDF and mass of a normal distribution truncated to a union of intervals.
//!
//! Interval masses are accumulated in log space. Each interval's mass is
//! taken from whichever tail it lies in, so supports far out in a tail keep
//! full relative precision instead of cancelling to `0/0`.

use crate::error::{Error, Result};
use crate::normal::{ln_add_exp, ln_interval_mass_shifted, MILLS_SWITCH};
use crate::truncation::TruncationSet;

/// Smallest total mass [`tn_mass`] will report as a plain probability.
pub const MASS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedNormal {
    mu: f64,
    sigma: f64,
    support: TruncationSet,
}

impl TruncatedNormal {
    pub fn new(mu: f64, sigma: f64, support: TruncationSet) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::NotFinite("truncated normal location"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "truncated normal scale {sigma} must be positive"
            )));
        }
        if support.is_empty() {
            return Err(Error::EmptyTruncation);
        }
        Ok(Self { mu, sigma, support })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn support(&self) -> &TruncationSet {
        &self.support
    }

    /// Log of the untruncated probability of the support.
    pub fn ln_mass(&self) -> f64 {
        let shift = tail_shift(self.mu, self.sigma, &self.support);
        ln_mass_below(f64::INFINITY, self.mu, self.sigma, &self.support, shift)
            - 0.5 * shift * shift
    }

    /// Probability of the support under the untruncated normal.
    pub fn mass(&self) -> Result<f64> {
        let m = self.ln_mass().exp();
        if m < MASS_FLOOR {
            Err(Error::NumericallyEmptySupport { mass: m })
        } else {
            Ok(m)
        }
    }

    /// Truncated CDF at `z`.
    ///
    /// Only fails when the support has no representable mass even in log
    /// space (a zero-width support, or standardized endpoints near 1e154).
    pub fn cdf(&self, z: f64) -> Result<f64> {
        truncated_cdf(z, self.mu, self.sigma, &self.support)
    }
}

/// Standardized distance from `mu` to the support when the support sits
/// beyond the Mills switch, else 0. Log masses are reported relative to it.
fn tail_shift(mu: f64, sigma: f64, support: &TruncationSet) -> f64 {
    let d = support
        .intervals()
        .iter()
        .map(|iv| {
            let (a, b) = ((iv.lo() - mu) / sigma, (iv.hi() - mu) / sigma);
            if a > 0.0 {
                a
            } else if b < 0.0 {
                -b
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min);
    if d.is_finite() && d >= MILLS_SWITCH {
        d
    } else {
        0.0
    }
}

/// Log of the untruncated probability of `support ∩ (-inf, z]`, plus
/// `shift^2 / 2`.
fn ln_mass_below(z: f64, mu: f64, sigma: f64, support: &TruncationSet, shift: f64) -> f64 {
    let standardize = |x: f64| (x - mu) / sigma;
    let mut acc = f64::NEG_INFINITY;
    for iv in support.intervals() {
        if iv.lo() > z {
            break;
        }
        let hi = iv.hi().min(z);
        acc = ln_add_exp(
            acc,
            ln_interval_mass_shifted(standardize(iv.lo()), standardize(hi), shift),
        );
    }
    acc
}

/// [`TruncatedNormal::cdf`] without taking ownership of the support.
pub(crate) fn truncated_cdf(z: f64, mu: f64, sigma: f64, support: &TruncationSet) -> Result<f64> {
    if z.is_nan() {
        return Err(Error::NotFinite("truncated normal CDF argument"));
    }
    let shift = tail_shift(mu, sigma, support);
    let ln_total = ln_mass_below(f64::INFINITY, mu, sigma, support, shift);
    if !ln_total.is_finite() {
        return Err(Error::NumericallyEmptySupport { mass: 0.0 });
    }
    if support.supremum().is_some_and(|s| z >= s) {
        return Ok(1.0);
    }
    let ln_below = ln_mass_below(z, mu, sigma, support, shift);
    Ok((ln_below - ln_total).exp().clamp(0.0, 1.0))
}

/// Untruncated probability of the support; errors below [`MASS_FLOOR`].
pub fn tn_mass(spec: &TruncatedNormal) -> Result<f64> {
    spec.mass()
}

pub fn tn_cdf(z: f64, spec: &TruncatedNormal) -> Result<f64> {
    spec.cdf(z)
}

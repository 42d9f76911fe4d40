//! Standard normal distribution functions with tail-accurate evaluation.
//!
//! Probabilities are always computed on the shorter tail through `erfc`,
//! and the log-tail switches to a continued fraction for the Mills ratio
//! once `erfc` would underflow.

use libm::{erf, erfc};
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Above this argument `ln Q(x)` comes from the Mills-ratio continued fraction.
pub(crate) const MILLS_SWITCH: f64 = 25.0;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal CDF `Phi(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `Q(x) = 1 - Phi(x)`.
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `ln Q(x)`, finite for every finite `x`.
pub fn ln_sf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x < MILLS_SWITCH {
        if x < 0.0 {
            // Q(x) = 1 - Q(-x), Q(-x) <= 1/2
            (-sf(-x)).ln_1p()
        } else {
            sf(x).ln()
        }
    } else {
        -0.5 * x * x - LN_SQRT_2PI - mills_denominator(x).ln()
    }
}

/// `t(x)` with `Q(x) = pdf(x) / t(x)`, from
/// `t(x) = x + 1/(x + 2/(x + 3/(x + ...)))`.
fn mills_denominator(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=40).rev() {
        t = x + k as f64 / t;
    }
    t
}

/// `ln Phi(x)`.
pub fn ln_cdf(x: f64) -> f64 {
    ln_sf(-x)
}

/// Standard normal quantile `z_p` with `Phi(z_p) = p`.
///
/// Returns `-inf`/`+inf` at `p = 0`/`p = 1` and NaN outside `[0, 1]`.
pub fn quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub(crate) fn ln_1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(exp(a) + exp(b))`.
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(Phi(b) - Phi(a))` for standardized `a <= b`, accurate in both tails.
pub fn ln_interval_mass(a: f64, b: f64) -> f64 {
    ln_interval_mass_shifted(a, b, 0.0)
}

/// `ln(Phi(b) - Phi(a)) + shift^2 / 2`, where `shift` is at most the
/// distance from 0 to `[a, b]`.
///
/// Masses deep in a tail have logs near `-x^2/2`; removing a common
/// `shift^2/2` exactly keeps ratios of such masses free of cancellation.
pub(crate) fn ln_interval_mass_shifted(a: f64, b: f64, shift: f64) -> f64 {
    if !(a < b) {
        return f64::NEG_INFINITY;
    }
    if b <= 0.0 {
        return ln_interval_mass_shifted(-b, -a, shift);
    }
    let offset = 0.5 * shift * shift;
    if a >= MILLS_SWITCH {
        let diff = if b == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            -0.5 * (b - a) * (b + a) - (mills_denominator(b) / mills_denominator(a)).ln()
        };
        -0.5 * (a - shift) * (a + shift) - LN_SQRT_2PI - mills_denominator(a).ln()
            + ln_1m_exp(diff)
    } else if a >= 0.0 {
        let la = ln_sf(a);
        la + ln_1m_exp(ln_sf(b) - la) + offset
    } else {
        // straddles zero: both halves are bounded away from cancellation
        let upper = if b == f64::INFINITY {
            1.0
        } else {
            erf(b * FRAC_1_SQRT_2)
        };
        let lower = if a == f64::NEG_INFINITY {
            1.0
        } else {
            -erf(a * FRAC_1_SQRT_2)
        };
        (0.5 * (upper + lower)).ln() + offset
    }
}

//! Modified Bessel functions I0 and I1.
//!
//! The ascending series has all-positive terms (no cancellation) and is used
//! below the crossover; beyond it the standard large-argument expansion of
//! the exponentially scaled function converges to machine precision well
//! before its terms turn around. The scaled forms e^{-x} I_nu(x) are the
//! primary API: every formula in this crate only ever needs scaled
//! combinations, and the raw functions overflow near x ~ 700.

use crate::error::SpecialError;

/// Crossover between the ascending series and the asymptotic expansion.
const SERIES_CUTOFF: f64 = 15.0;

/// ln(f64::MAX), the overflow guard for unscaled values.
const LN_MAX: f64 = 709.782712893384;

/// e^{-x} I0(x) for x >= 0. Never overflows; lies in (0, 1].
pub fn bessel_i0_scaled(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "bessel argument must be finite and nonnegative");
    if x < SERIES_CUTOFF {
        series_i0(x) * (-x).exp()
    } else {
        asymptotic_scaled(x, 0.0)
    }
}

/// e^{-x} I1(x) for x >= 0. Never overflows; lies in [0, 1).
pub fn bessel_i1_scaled(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "bessel argument must be finite and nonnegative");
    if x < SERIES_CUTOFF {
        series_i1(x) * (-x).exp()
    } else {
        asymptotic_scaled(x, 1.0)
    }
}

/// I0(x) for x >= 0, erroring instead of overflowing.
pub fn bessel_i0(x: f64) -> Result<f64, SpecialError> {
    let scaled = bessel_i0_scaled(x);
    unscale(scaled, x)
}

/// I1(x) for x >= 0, erroring instead of overflowing.
pub fn bessel_i1(x: f64) -> Result<f64, SpecialError> {
    let scaled = bessel_i1_scaled(x);
    unscale(scaled, x)
}

fn unscale(scaled: f64, x: f64) -> Result<f64, SpecialError> {
    if scaled == 0.0 {
        return Ok(0.0);
    }
    let ln_value = scaled.ln() + x;
    if ln_value > LN_MAX {
        Err(SpecialError::Overflow { argument: x })
    } else {
        Ok(scaled * x.exp())
    }
}

fn series_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term < sum * f64::EPSILON {
            break;
        }
    }
    sum
}

fn series_i1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + 1.0));
        sum += term;
        if term < sum * f64::EPSILON {
            break;
        }
    }
    sum
}

/// Large-argument expansion of e^{-x} I_nu(x), truncated at the smallest
/// term. For x >= 15 the smallest term is below 1e-13 relative.
fn asymptotic_scaled(x: f64, nu: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

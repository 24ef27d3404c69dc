//! Semicircle-law objects: density, Stieltjes transform, and the scaled
//! moment generating function that drives the overlap dynamics.
//!
//! The density is mu(s) = sqrt(4 - s^2) / (2 pi) on [-2, 2]. Its moment
//! generating function at scale lambda,
//!
//!   M(lambda, tau) = int mu(s) e^{s tau / sqrt(lambda)} ds
//!                  = (sqrt(lambda) / tau) I1(2 tau / sqrt(lambda)),
//!
//! grows like e^{2 tau / sqrt(lambda)}, so the scaled form
//! e^{-2 tau / sqrt(lambda)} M(lambda, tau) in (0, 1] is what all evaluators
//! compose with. For quadrature routes the substitution s = 2 cos(theta)
//! removes the square-root endpoint behavior, leaving smooth sin^2 weights.

use num_complex::Complex64;

use crate::error::SemicircleError;
use crate::quad::gl_integrate;
use crate::special::{bessel_i1, bessel_i1_scaled};

/// Support of the semicircle density.
pub const SUPPORT: (f64, f64) = (-2.0, 2.0);

/// Density of the semicircle law, zero off [-2, 2].
pub fn semicircle_density(s: f64) -> f64 {
    if s.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - s * s).sqrt() / (2.0 * std::f64::consts::PI)
    }
}

/// Cumulative distribution of the semicircle law.
pub fn semicircle_cdf(s: f64) -> f64 {
    if s <= -2.0 {
        0.0
    } else if s >= 2.0 {
        1.0
    } else {
        0.5 + s * (4.0 - s * s).sqrt() / (4.0 * std::f64::consts::PI)
            + (0.5 * s).asin() / std::f64::consts::PI
    }
}

/// Stieltjes transform of the semicircle law,
/// G(z) = (-z + sqrt(z^2 - 4)) / 2 for z off [-2, 2].
///
/// The root is taken as sqrt(z - 2) * sqrt(z + 2) with principal square
/// roots, which selects the Herglotz branch on both half-planes and the
/// decaying -1/z behavior on the real axis outside the support.
pub fn semicircle_stieltjes(z: Complex64) -> Result<Complex64, SemicircleError> {
    // The edge values are the finite limits G(+-2) = -+1, so only the open
    // interval is rejected.
    if z.im == 0.0 && z.re.abs() < 2.0 {
        return Err(SemicircleError::OnSupport { re: z.re });
    }
    let root = (z - 2.0).sqrt() * (z + 2.0).sqrt();
    Ok(0.5 * (root - z))
}

/// Scaled moment generating function value e^{-2 tau / sqrt(lambda)} M(lambda, tau).
///
/// Bounded in (0, 1] for tau >= 0 and safe at any argument size.
pub fn mgf_scaled(lambda: f64, tau: f64) -> f64 {
    debug_assert!(lambda > 0.0 && tau >= 0.0);
    let x = 2.0 * tau / lambda.sqrt();
    if x < 1e-7 {
        // (sqrt(lambda)/tau) I1(x) e^{-x} with I1(x) = x/2 (1 + x^2/8 + ...)
        return (-x).exp() * (1.0 + x * x / 8.0);
    }
    lambda.sqrt() / tau * bessel_i1_scaled(x)
}

/// Moment generating function M(lambda, tau) via the Bessel identity.
/// Errors when the value exceeds the f64 range.
pub fn mgf(lambda: f64, tau: f64) -> Result<f64, SemicircleError> {
    debug_assert!(lambda > 0.0 && tau >= 0.0);
    if tau == 0.0 {
        return Ok(1.0);
    }
    let x = 2.0 * tau / lambda.sqrt();
    if x < 1e-7 {
        return Ok(1.0 + x * x / 8.0);
    }
    Ok(lambda.sqrt() / tau * bessel_i1(x)?)
}

/// Quadrature route for M(lambda, tau): 2/pi int_0^pi sin^2(t) e^{x cos t} dt
/// with x = 2 tau / sqrt(lambda). Fallback and cross-check for the Bessel
/// identity; errors on overflow like `mgf`.
pub fn mgf_by_quadrature(lambda: f64, tau: f64, nodes: usize) -> Result<f64, SemicircleError> {
    let scaled = mgf_scaled_by_quadrature(lambda, tau, nodes);
    let x = 2.0 * tau / lambda.sqrt();
    if scaled > 0.0 && scaled.ln() + x > 709.78 {
        return Err(SemicircleError::Special(
            crate::error::SpecialError::Overflow { argument: x },
        ));
    }
    Ok(scaled * x.exp())
}

/// Quadrature route for the scaled MGF: 2/pi int_0^pi sin^2(t) e^{x (cos t - 1)} dt.
pub fn mgf_scaled_by_quadrature(lambda: f64, tau: f64, nodes: usize) -> f64 {
    let x = 2.0 * tau / lambda.sqrt();
    2.0 / std::f64::consts::PI
        * gl_integrate(
            |t: f64| {
                let s = t.sin();
                s * s * (x * (t.cos() - 1.0)).exp()
            },
            0.0,
            std::f64::consts::PI,
            nodes,
        )
}

/// Laplace transform of the MGF on the real axis,
/// int_0^inf e^{-p tau} M(lambda, tau) d tau = -sqrt(lambda) G(p sqrt(lambda)),
/// defined for p > 2 / sqrt(lambda).
pub fn mgf_laplace(lambda: f64, p: f64) -> Result<f64, SemicircleError> {
    let threshold = 2.0 / lambda.sqrt();
    if p <= threshold {
        return Err(SemicircleError::LaplaceDomain { p, threshold });
    }
    let g = semicircle_stieltjes(Complex64::new(p * lambda.sqrt(), 0.0))?;
    Ok(-lambda.sqrt() * g.re)
}

//! Closed-form time evolution of the overlap and cost for rank-one
//! estimation under gradient flow on the sphere.
//!
//! Everything is evaluated in overflow-safe scaled form. With
//! r = (1 - 1/sqrt(lambda))^2 and mt(x) the scaled MGF of the semicircle
//! law, the two fundamental objects are
//!
//!   g(tau) = alpha * [1 - (1/lambda) int_0^tau e^{-r s} mt(s) ds]
//!   h(tau) = e^{-2 r tau} mt(2 tau)
//!            + 2 alpha int_0^tau g(s) mt(2 tau - s) e^{-r (2 tau - s)} ds
//!            + int int g(u) g(v) mt(2 tau - u - v) e^{-r (2 tau - u - v)} du dv
//!
//! which are the raw overlap generating quantities times e^{-(1+1/lambda) tau}
//! and e^{-2(1+1/lambda) tau} respectively. Every exponent above is
//! nonpositive, so each integrand is bounded and the raw exponential growth
//! (which overflows before tau ~ 300) never materializes. The observable
//! overlap is g / sqrt(h), where the scale factors cancel exactly.

use crate::error::TheoryError;
use crate::quad::{adaptive_gl, decay_panels, gl_mapped};
use crate::semicircle::{mgf_scaled, semicircle_stieltjes};
use crate::special::{bessel_i0_scaled, bessel_i1_scaled};
use num_complex::Complex64;

/// Signal-to-noise ratio, initial overlap and output grid for one scenario.
#[derive(Clone, Debug)]
pub struct ScenarioParams {
    pub lambda: f64,
    pub alpha: f64,
    pub tau_grid: Vec<f64>,
}

impl ScenarioParams {
    pub fn new(lambda: f64, alpha: f64, tau_grid: Vec<f64>) -> Result<Self, TheoryError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(TheoryError::InvalidLambda(lambda));
        }
        if !(alpha.abs() <= 1.0) {
            return Err(TheoryError::InvalidAlpha(alpha));
        }
        if tau_grid.is_empty()
            || tau_grid[0] < 0.0
            || tau_grid.windows(2).any(|w| w[1] <= w[0])
            || tau_grid.iter().any(|t| !t.is_finite())
        {
            return Err(TheoryError::InvalidGrid);
        }
        Ok(ScenarioParams {
            lambda,
            alpha,
            tau_grid,
        })
    }

    /// Uniform grid 0..tau_max with `points` samples (includes both ends).
    pub fn with_linspace(
        lambda: f64,
        alpha: f64,
        tau_max: f64,
        points: usize,
    ) -> Result<Self, TheoryError> {
        if points < 2 || !(tau_max > 0.0) {
            return Err(TheoryError::InvalidGrid);
        }
        let grid = (0..points)
            .map(|i| tau_max * i as f64 / (points - 1) as f64)
            .collect();
        Self::new(lambda, alpha, grid)
    }

    /// Exponent rate r = (1 - 1/sqrt(lambda))^2 entering every scaled kernel.
    pub fn decay_rate(&self) -> f64 {
        decay_rate(self.lambda)
    }
}

pub fn decay_rate(lambda: f64) -> f64 {
    let s = 1.0 / lambda.sqrt();
    (1.0 - s) * (1.0 - s)
}

/// Sampled theory curves over the scenario grid.
#[derive(Clone, Debug)]
pub struct TheoryCurve {
    pub tau: Vec<f64>,
    pub q_bar: Vec<f64>,
    pub cost: Vec<f64>,
    pub p1_bar: Vec<f64>,
}

/// Cost and the noise-similarity overlap at one time, with an accuracy flag
/// for the log-derivative estimate.
#[derive(Clone, Copy, Debug)]
pub struct CostPoint {
    pub cost: f64,
    pub p1_bar: f64,
    /// Set when the Richardson disagreement of the derivative exceeds 1e-5.
    pub degraded: bool,
}

// ---------------------------------------------------------------------------
// scaled overlap g

/// alpha-free core of the scaled overlap: g(tau) = alpha * overlap_core(tau).
fn overlap_core(lambda: f64, tau: f64) -> f64 {
    if tau == 0.0 {
        return 1.0;
    }
    let r = decay_rate(lambda);
    let scale0 = lambda.sqrt().min(1.0) * 0.5;
    let cuts = decay_panels(tau, r, scale0);
    let panel_tol = (1e-12 / cuts.len() as f64).max(1e-15);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let mut f = |s: f64| (-r * s).exp() * mgf_scaled(lambda, s);
        total += adaptive_gl(&mut f, pair[0], pair[1], panel_tol);
    }
    1.0 - total / lambda
}

/// Scaled overlap generating value g(tau) = e^{-(1+1/lambda) tau} q_hat(tau).
pub fn hat_q_scaled(params: &ScenarioParams, tau: f64) -> f64 {
    params.alpha * overlap_core(params.lambda, tau)
}

/// Angular-integral form of the excess overlap:
/// overlap_core(tau) - (1 - 1/lambda) 1{lambda > 1} = (2 / (pi lambda)) e^{-r tau} J(tau).
///
/// Positive integrand, so it stays accurate long after the direct form has
/// cancelled to rounding noise; it is also the natural object for the
/// super-critical convergence diagnostics.
fn angular_excess(lambda: f64, tau: f64) -> f64 {
    2.0 / (std::f64::consts::PI * lambda) * (-decay_rate(lambda) * tau).exp()
        * angular_integral(lambda, tau)
}

fn angular_integral(lambda: f64, tau: f64) -> f64 {
    let b = 2.0 / lambda.sqrt();
    let a = 1.0 + 1.0 / lambda;
    let mut f = |theta: f64| {
        let s = theta.sin();
        (b * (theta.cos() - 1.0) * tau).exp() * s * s / (a - b * theta.cos())
    };
    adaptive_gl(&mut f, 0.0, std::f64::consts::PI, 1e-14)
}

/// Excess of g over its large-time limit, computed without cancellation:
/// g(tau) - alpha (1 - 1/lambda) 1{lambda > 1}.
pub fn hat_q_scaled_excess(params: &ScenarioParams, tau: f64) -> f64 {
    params.alpha * angular_excess(params.lambda, tau)
}

/// overlap_core with the sub-critical tail taken from the angular form.
///
/// The direct form computes 1 - (integral) and cancels to rounding noise
/// once the true value drops below ~1e-13; past that point the positive
/// angular integral carries the value instead.
fn overlap_core_robust(lambda: f64, tau: f64) -> f64 {
    let direct = overlap_core(lambda, tau);
    if lambda < 1.0 && direct.abs() < 1e-12 {
        angular_excess(lambda, tau)
    } else {
        direct
    }
}

// ---------------------------------------------------------------------------
// scaled second moment h

/// Per-axis quadrature nodes for the hat-p integrals over [0, tau]:
/// 32-node panels, at least 128 nodes, panel width tied to the kernel decay
/// rate so the exponential factors are resolved.
fn axis_rule(lambda: f64, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let r = decay_rate(lambda);
    let width = if r > 3.0 { 6.0 / r } else { 2.0 };
    let panels = ((tau / width).ceil() as usize).clamp(4, 64);
    let mut nodes = Vec::with_capacity(32 * panels);
    let mut weights = Vec::with_capacity(32 * panels);
    for k in 0..panels {
        let a = tau * k as f64 / panels as f64;
        let b = tau * (k + 1) as f64 / panels as f64;
        let (n, w) = gl_mapped(a, b, 32);
        nodes.extend(n);
        weights.extend(w);
    }
    (nodes, weights)
}

/// overlap_core evaluated cumulatively at an ascending node set, with the
/// cancelled sub-critical tail replaced by the angular form (see
/// `overlap_core_robust`).
fn overlap_core_at(lambda: f64, nodes: &[f64]) -> Vec<f64> {
    let r = decay_rate(lambda);
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &s in nodes {
        let mut f = |u: f64| (-r * u).exp() * mgf_scaled(lambda, u);
        acc += crate::quad::gl_integrate(&mut f, prev, s, 24);
        prev = s;
        out.push(1.0 - acc / lambda);
    }
    if lambda < 1.0 {
        for (i, &s) in nodes.iter().enumerate() {
            if out[i].abs() < 1e-12 || r * s > 32.0 {
                out[i] = angular_excess(lambda, s);
            }
        }
    }
    out
}

/// The three scaled pieces of h: (t1, c2, c3) with
/// h = t1 + alpha^2 (c2 + c3). Factoring alpha out keeps the odd symmetry
/// of the overlap in alpha exact to the bit.
fn hat_p_parts(lambda: f64, tau: f64) -> (f64, f64, f64) {
    let r = decay_rate(lambda);
    let t1 = (-2.0 * r * tau).exp() * mgf_scaled(lambda, 2.0 * tau);
    if tau == 0.0 {
        return (t1, 0.0, 0.0);
    }
    let (nodes, weights) = axis_rule(lambda, tau);
    let core = overlap_core_at(lambda, &nodes);
    let mut c2 = 0.0;
    for i in 0..nodes.len() {
        let x = 2.0 * tau - nodes[i];
        c2 += weights[i] * core[i] * mgf_scaled(lambda, x) * (-r * x).exp();
    }
    c2 *= 2.0;
    let wc: Vec<f64> = weights
        .iter()
        .zip(&core)
        .map(|(w, c)| w * c)
        .collect();
    let mut c3 = 0.0;
    for i in 0..nodes.len() {
        let mut row = 0.0;
        for j in 0..nodes.len() {
            let x = 2.0 * tau - nodes[i] - nodes[j];
            row += wc[j] * mgf_scaled(lambda, x) * (-r * x).exp();
        }
        c3 += wc[i] * row;
    }
    (t1, c2, c3)
}

/// Scaled second-moment value h(tau) = e^{-2(1+1/lambda) tau} p_hat(tau).
/// Strictly positive until it underflows in the deep sub-critical tail.
pub fn hat_p_scaled(params: &ScenarioParams, tau: f64) -> f64 {
    let (t1, c2, c3) = hat_p_parts(params.lambda, tau);
    t1 + params.alpha * params.alpha * (c2 + c3)
}

/// ln h(tau), valid even where h itself underflows.
///
/// In the sub-critical tail every piece of h carries the common factor
/// e^{-2 r tau}; pulling it out leaves sums of products of the angular
/// overlap form (algebraic decay only), so the logarithm stays finite.
fn hat_p_scaled_ln(params: &ScenarioParams, tau: f64) -> f64 {
    let direct = hat_p_scaled(params, tau);
    if direct > 1e-280 {
        return direct.ln();
    }
    let lambda = params.lambda;
    let alpha = params.alpha;
    let r = decay_rate(lambda);
    if lambda <= 1.0 || alpha == 0.0 {
        let t1 = mgf_scaled(lambda, 2.0 * tau);
        let (mut c2, mut c3) = (0.0, 0.0);
        if alpha != 0.0 {
            let (nodes, weights) = axis_rule(lambda, tau);
            // core(s) e^{r s} via the angular form; bounded and positive.
            let boosted: Vec<f64> = nodes
                .iter()
                .map(|&s| 2.0 / (std::f64::consts::PI * lambda) * angular_integral(lambda, s))
                .collect();
            for i in 0..nodes.len() {
                c2 += weights[i] * boosted[i] * mgf_scaled(lambda, 2.0 * tau - nodes[i]);
            }
            c2 *= 2.0;
            let wb: Vec<f64> = weights.iter().zip(&boosted).map(|(w, b)| w * b).collect();
            for i in 0..nodes.len() {
                let mut row = 0.0;
                for j in 0..nodes.len() {
                    row += wb[j] * mgf_scaled(lambda, 2.0 * tau - nodes[i] - nodes[j]);
                }
                c3 += wb[i] * row;
            }
        }
        -2.0 * r * tau + (t1 + alpha * alpha * (c2 + c3)).ln()
    } else {
        // Super-critical h tends to alpha^2 (1 - 1/lambda); reaching this
        // branch means alpha^2 itself is at the underflow floor.
        2.0 * alpha.abs().max(f64::MIN_POSITIVE).ln() + (1.0 - 1.0 / lambda).ln()
    }
}

// ---------------------------------------------------------------------------
// observables

/// Limiting overlap q-bar(tau) = g(tau) / sqrt(h(tau)), clamped to [-1, 1].
pub fn bar_q(params: &ScenarioParams, tau: f64) -> f64 {
    let g = params.alpha * overlap_core_robust(params.lambda, tau);
    if g == 0.0 {
        return 0.0;
    }
    let h = hat_p_scaled(params, tau);
    if !(h > 0.0) {
        // h underflowed: only reachable deep in the sub-critical tail where
        // the overlap has long decayed to zero.
        return 0.0;
    }
    (g / h.sqrt()).clamp(-1.0, 1.0)
}

/// Critical-point fast path: at lambda = 1 the scaled overlap is
/// alpha (I0 + I1)(2 tau) e^{-2 tau}, evaluated with scaled Bessel functions.
pub fn bar_q_lambda1(alpha: f64, tau: f64) -> f64 {
    let g = alpha * (bessel_i0_scaled(2.0 * tau) + bessel_i1_scaled(2.0 * tau));
    if g == 0.0 {
        return 0.0;
    }
    let params = ScenarioParams::new(1.0, alpha, vec![tau.max(1.0)]).expect("valid");
    let h = hat_p_scaled(&params, tau);
    if !(h > 0.0) {
        return 0.0;
    }
    (g / h.sqrt()).clamp(-1.0, 1.0)
}

/// Noise-free overlap alpha (alpha^2 + (1 - alpha^2) e^{-2 tau})^{-1/2}.
pub fn noiseless_q(alpha: f64, tau: f64) -> f64 {
    alpha / (alpha * alpha + (1.0 - alpha * alpha) * (-2.0 * tau).exp()).sqrt()
}

/// Cost and p1-bar at one time.
///
/// The cost is 1 - (1 + 1/lambda) - d/dtau ln h / 2, with the log-derivative
/// taken by central differences plus one Richardson refinement; analytic
/// differentiation of the double integral in h would triple the quadrature
/// surface for no gain at the 1e-5 level needed here.
pub fn cost_and_p1(params: &ScenarioParams, tau: f64) -> CostPoint {
    if tau == 0.0 {
        // p1 vanishes at tau = 0 in the limit: the first moment of the
        // initial resolvent measure is zero by symmetry.
        return CostPoint {
            cost: 1.0 - params.alpha * params.alpha,
            p1_bar: 0.0,
            degraded: false,
        };
    }
    let step = (1e-4_f64).min(0.5 * tau);
    let ln_at = |t: f64| hat_p_scaled_ln(params, t);
    let d_coarse = (ln_at(tau + step) - ln_at(tau - step)) / (2.0 * step);
    let d_fine = (ln_at(tau + 0.5 * step) - ln_at(tau - 0.5 * step)) / step;
    let d = (4.0 * d_fine - d_coarse) / 3.0;
    let degraded = !(d - d_fine).abs().is_finite() || (d - d_fine).abs() > 1e-5;
    let half_log_derivative = (1.0 + 1.0 / params.lambda) + 0.5 * d;
    let q = bar_q(params, tau);
    CostPoint {
        cost: 1.0 - half_log_derivative,
        p1_bar: params.lambda.sqrt() * (half_log_derivative - q * q),
        degraded,
    }
}

/// Evaluate overlap, cost and p1-bar over the scenario grid.
pub fn theory_curve(params: &ScenarioParams) -> TheoryCurve {
    let mut q_bar = Vec::with_capacity(params.tau_grid.len());
    let mut cost = Vec::with_capacity(params.tau_grid.len());
    let mut p1_bar = Vec::with_capacity(params.tau_grid.len());
    for &tau in &params.tau_grid {
        q_bar.push(bar_q(params, tau));
        let c = cost_and_p1(params, tau);
        cost.push(c.cost);
        p1_bar.push(c.p1_bar);
    }
    TheoryCurve {
        tau: params.tau_grid.clone(),
        q_bar,
        cost,
        p1_bar,
    }
}

// ---------------------------------------------------------------------------
// scaled dynamics facade

/// Overflow-safe dynamic state built from a scenario: the scaled overlap g,
/// scaled second moment h, and the cost-rate dF/dtau = q^2 + p1/sqrt(lambda).
#[derive(Clone, Debug)]
pub struct ScaledDynamics {
    params: ScenarioParams,
}

impl ScaledDynamics {
    pub fn new(params: ScenarioParams) -> Self {
        ScaledDynamics { params }
    }

    pub fn g(&self, tau: f64) -> f64 {
        hat_q_scaled(&self.params, tau)
    }

    pub fn h(&self, tau: f64) -> f64 {
        hat_p_scaled(&self.params, tau)
    }

    pub fn f_rate(&self, tau: f64) -> f64 {
        let c = cost_and_p1(&self.params, tau);
        let q = bar_q(&self.params, tau);
        q * q + c.p1_bar / self.params.lambda.sqrt()
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }
}

// ---------------------------------------------------------------------------
// asymptotics

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    SubCritical,
    Critical,
    SuperCritical,
}

/// Convergence diagnostics for the super-critical regime: the overlap-gap
/// form psi, the cancellation-free generating-function form phi, and the
/// algebraic reference envelope a_ref. All three share the same tail law.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticTriple {
    pub psi: f64,
    pub phi: f64,
    pub a_ref: f64,
}

#[derive(Clone, Debug)]
pub struct AsymptoteReport {
    pub regime: Regime,
    pub predicted: f64,
    pub diagnostics: Option<DiagnosticTriple>,
}

/// Large-time asymptote of the overlap, dispatched on the regime.
pub fn asymptote(params: &ScenarioParams, tau: f64) -> AsymptoteReport {
    let lambda = params.lambda;
    let alpha = params.alpha;
    let r = decay_rate(lambda);
    if lambda > 1.0 {
        let limit = alpha.signum() * (1.0 - 1.0 / lambda).sqrt();
        let algebraic = algebraic_envelope(lambda, tau);
        let correction =
            alpha.signum() * algebraic * (-r * tau).exp() / ((1.0 - 1.0 / lambda).sqrt());
        // phi = (g - alpha (1 - 1/lambda)) e^{r tau}: the e^{-r tau} inside the
        // angular form cancels analytically, so no large exponentials appear.
        let phi = params.alpha
            * (2.0 / (std::f64::consts::PI * lambda))
            * angular_integral(lambda, tau);
        let a_ref = alpha * algebraic;
        let gap = bar_q(params, tau) - limit;
        let psi = if gap == 0.0 {
            0.0
        } else {
            // Saturates once the gap is pure rounding noise against e^{r tau}.
            let magnitude = (gap.abs().ln() + r * tau).min(700.0);
            gap.signum() * alpha.abs() * (1.0 - 1.0 / lambda).sqrt() * magnitude.exp()
        };
        AsymptoteReport {
            regime: Regime::SuperCritical,
            predicted: limit + correction,
            diagnostics: Some(DiagnosticTriple { psi, phi, a_ref }),
        }
    } else if lambda < 1.0 {
        let inv = 1.0 / lambda.sqrt();
        let pref = alpha * (2.0 / std::f64::consts::PI).powf(0.25);
        let den = lambda.powf(0.625)
            * (1.0 - inv) * (1.0 - inv)
            * (1.0 - alpha * alpha + alpha * alpha / (lambda * (inv - 1.0) * (inv - 1.0))).sqrt();
        AsymptoteReport {
            regime: Regime::SubCritical,
            predicted: pref / den * tau.powf(-0.75),
            diagnostics: None,
        }
    } else {
        AsymptoteReport {
            regime: Regime::Critical,
            predicted: alpha.signum() * (2.0 / (std::f64::consts::PI * tau)).powf(0.25),
            diagnostics: None,
        }
    }
}

/// tau^{-3/2} / (2 sqrt(pi) lambda^{1/4} (1 - 1/sqrt(lambda))^2)
fn algebraic_envelope(lambda: f64, tau: f64) -> f64 {
    let r = decay_rate(lambda);
    tau.powf(-1.5) / (2.0 * std::f64::consts::PI.sqrt() * lambda.powf(0.25) * r)
}

// ---------------------------------------------------------------------------
// the double-integral constant

/// Numerical evaluation of int int e^{-(1+1/lambda)(x+y)} M(x+y) dx dy over
/// the positive quadrant, which collapses the super-critical second moment.
/// Equal to 1/(1 - 1/lambda) for lambda > 1.
pub fn k_lambda(lambda: f64) -> Result<f64, TheoryError> {
    if !(lambda > 1.0) {
        return Err(TheoryError::InvalidLambda(lambda));
    }
    let r = decay_rate(lambda);
    // e^{-(1+1/lambda) s} M(s) = e^{-r s} mt(s); truncate where the
    // integrand's exponential tail is negligible against 1e-8 absolute.
    let horizon = (40.0 / r).min(2e6);
    let cuts = decay_panels(horizon, r, lambda.sqrt().min(1.0) * 0.5);
    let (mut nodes, mut weights) = (Vec::new(), Vec::new());
    for pair in cuts.windows(2) {
        let (n, w) = gl_mapped(pair[0], pair[1], 32);
        nodes.extend(n);
        weights.extend(w);
    }
    let mut total = 0.0;
    for i in 0..nodes.len() {
        let mut row = 0.0;
        for j in 0..nodes.len() {
            let s = nodes[i] + nodes[j];
            row += weights[j] * (-r * s).exp() * mgf_scaled(lambda, s);
        }
        total += weights[i] * row;
    }
    // Tail bound from mt(s) <= 1: remainder < int_{s > horizon} s e^{-r s} ds.
    let tail = (horizon + 1.0 / r) / r * (-r * horizon).exp();
    if tail > 1e-8 * total.max(1.0) {
        return Err(TheoryError::TruncationTolerance { tail });
    }
    Ok(total)
}

// ---------------------------------------------------------------------------

/// Stieltjes transform value used by the Laplace-domain identities,
/// G(p sqrt(lambda)) on the real axis right of the support.
pub fn stieltjes_at_laplace_point(lambda: f64, p: f64) -> f64 {
    semicircle_stieltjes(Complex64::new(p * lambda.sqrt(), 0.0))
        .expect("point lies right of the support")
        .re
}

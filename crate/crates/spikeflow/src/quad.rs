//! Gauss-Legendre and trapezoid quadrature building blocks.
//!
//! Everything downstream integrates smooth (analytic) integrands, so
//! Gauss-Legendre panels converge spectrally and a modest fixed order per
//! panel is enough. Rules are cached by node count since the same orders are
//! requested millions of times from the dynamics evaluators.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendre,
    Trapezoid,
}

/// Nodes and weights for integration over [-1, 1] (Gauss-Legendre) or an
/// explicit abscissa set (trapezoid).
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kind: RuleKind,
}

impl QuadratureRule {
    /// Gauss-Legendre rule with `n` nodes on [-1, 1].
    ///
    /// Nodes are the Legendre roots found by Newton iteration from the
    /// Chebyshev initial guess; weights are 2 / ((1 - x^2) P_n'(x)^2).
    pub fn gauss_legendre(n: usize) -> QuadratureRule {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            let (_, d) = legendre_with_derivative(n, 0.0);
            nodes[n / 2] = 0.0;
            weights[n / 2] = 2.0 / (d * d);
        }
        QuadratureRule {
            nodes,
            weights,
            kind: RuleKind::GaussLegendre,
        }
    }

    /// Trapezoid rule on `n` equispaced points over [a, b].
    pub fn trapezoid(a: f64, b: f64, n: usize) -> QuadratureRule {
        assert!(n >= 2 && b > a);
        let h = (b - a) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
        let mut weights = vec![h; n];
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        QuadratureRule {
            nodes,
            weights,
            kind: RuleKind::Trapezoid,
        }
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn cached_gl(n: usize) -> Arc<QuadratureRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(QuadratureRule::gauss_legendre(n)))
        .clone()
}

/// Gauss-Legendre integral of `f` over [a, b] with `n` nodes.
pub fn gl_integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let rule = cached_gl(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Gauss-Legendre nodes and weights mapped onto [a, b].
pub fn gl_mapped(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = cached_gl(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let nodes = rule.nodes.iter().map(|x| mid + half * x).collect();
    let weights = rule.weights.iter().map(|w| w * half).collect();
    (nodes, weights)
}

/// Adaptive composite Gauss-Legendre to an absolute tolerance.
///
/// Each interval is judged by comparing a 16-node and a 32-node rule and
/// bisected until they agree; the tolerance is split across halves but
/// floored near the rounding level of the interval value, which keeps the
/// recursion from chasing noise it can never beat.
pub fn adaptive_gl<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn recurse<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let coarse = gl_integrate(&mut *f, a, b, 16);
        let fine = gl_integrate(&mut *f, a, b, 32);
        let floor = 32.0 * f64::EPSILON * fine.abs() + 1e-300;
        if (fine - coarse).abs() <= tol.max(floor) || depth >= 24 {
            return fine;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(f, a, b, abs_tol.max(1e-16), 0)
}

/// Panel breakpoints over [0, length] for integrands behaving like
/// exp(-rate*s) times a factor that varies on scale `scale0` near the origin
/// and only algebraically afterwards. Panels start at `scale0` and double
/// until the per-panel exponent budget (rate * width <= 8) takes over.
pub fn decay_panels(length: f64, rate: f64, scale0: f64) -> Vec<f64> {
    assert!(length > 0.0);
    let mut cuts = vec![0.0];
    let cap = if rate > 0.0 { 8.0 / rate } else { f64::INFINITY };
    let mut w = scale0.max(1e-3).min(length);
    let mut s = 0.0;
    while s < length {
        if rate > 0.0 && s * rate > 45.0 {
            // The exponential factor has fully decayed; close out directly.
            cuts.push(length);
            break;
        }
        let step = w.min(cap).min(length - s);
        s += step;
        cuts.push(s);
        w *= 2.0;
        if cuts.len() > 4096 {
            if *cuts.last().unwrap() < length {
                cuts.push(length);
            }
            break;
        }
    }
    cuts
}

/// Integrate over panel breakpoints with a fixed-order rule per panel.
pub fn panel_integrate<F: FnMut(f64) -> f64>(mut f: F, cuts: &[f64], order: usize) -> f64 {
    let mut acc = 0.0;
    for pair in cuts.windows(2) {
        acc += gl_integrate(&mut f, pair[0], pair[1], order);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gl_nodes_symmetric_and_weights_sum_to_two() {
        for n in [4, 16, 33, 128] {
            let rule = QuadratureRule::gauss_legendre(n);
            let sum: f64 = rule.weights.iter().sum();
            assert_relative_eq!(sum, 2.0, epsilon = 1e-13);
            for i in 0..n {
                assert_relative_eq!(rule.nodes[i], -rule.nodes[n - 1 - i], epsilon = 1e-14);
                assert!(rule.weights[i] > 0.0);
            }
        }
    }

    #[test]
    fn gl_exact_for_polynomials() {
        // n-point rule is exact through degree 2n-1.
        let val = gl_integrate(|x| x.powi(9) + 3.0 * x.powi(4), -1.0, 1.0, 5);
        assert_relative_eq!(val, 6.0 / 5.0, epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_weights_sum_to_interval_length() {
        let rule = QuadratureRule::trapezoid(1.0, 4.0, 37);
        let sum: f64 = rule.weights.iter().sum();
        assert_relative_eq!(sum, 3.0, epsilon = 1e-13);
        assert!(rule.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // int_0^1 exp(-200 (x-0.3)^2) dx against erf closed form surrogate:
        // compare adaptive against a brute-force fine composite rule.
        let mut f = |x: f64| (-200.0 * (x - 0.3) * (x - 0.3)).exp();
        let adaptive = adaptive_gl(&mut f, 0.0, 1.0, 1e-13);
        let mut brute = 0.0;
        let panels = 2000;
        for k in 0..panels {
            let a = k as f64 / panels as f64;
            let b = (k + 1) as f64 / panels as f64;
            brute += gl_integrate(&mut f, a, b, 8);
        }
        assert_relative_eq!(adaptive, brute, epsilon = 1e-12);
    }

    #[test]
    fn decay_panels_cover_interval() {
        for (len, rate) in [(60.0, 0.17), (5.0, 0.0), (1e4, 4.7), (40000.0, 6e-4)] {
            let cuts = decay_panels(len, rate, 0.5);
            assert_eq!(cuts[0], 0.0);
            assert_relative_eq!(*cuts.last().unwrap(), len, epsilon = 1e-9);
            assert!(cuts.windows(2).all(|p| p[1] > p[0]));
        }
    }

    #[test]
    fn exponential_integral_via_decay_panels() {
        // int_0^80 exp(-2s) ds = (1 - e^-160)/2
        let cuts = decay_panels(80.0, 2.0, 0.5);
        let val = panel_integrate(|s| (-2.0 * s).exp(), &cuts, 32);
        assert_relative_eq!(val, 0.5, epsilon = 1e-13);
    }
}

//! Noise-matrix sampling, resolvent probes, and the finite-size
//! concentration experiments behind the local semicircle picture.
//!
//! Resolvent elements for a whole contour of shift points are computed by
//! tridiagonalizing the matrix once and back-substituting a complex
//! tridiagonal system per point; a dense complex factorization per shift
//! would cost three orders of magnitude more at the sizes used here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::MatrixError;
use crate::ide::ContourGrid;
use crate::semicircle::{semicircle_cdf, semicircle_stieltjes};
use crate::streams::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    /// Gaussian with off-diagonal variance 1/n and diagonal variance 2/n.
    GaussianGoe,
    /// Signs scaled by 1/sqrt(n) off the diagonal; the diagonal keeps the
    /// doubled second moment of the Gaussian convention.
    Rademacher,
}

impl std::str::FromStr for Ensemble {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "goe" | "gaussian_goe" => Ok(Ensemble::GaussianGoe),
            "rademacher" => Ok(Ensemble::Rademacher),
            other => Err(format!("unknown ensemble '{other}'")),
        }
    }
}

/// A sampled symmetric noise matrix H = xi / sqrt(n).
#[derive(Clone, Debug)]
pub struct NoiseInstance {
    n: usize,
    ensemble: Ensemble,
    seed: u64,
    matrix: DMatrix<f64>,
}

impl NoiseInstance {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// All-zero matrix, handy for synthetic edge cases.
    pub fn zero(n: usize) -> NoiseInstance {
        NoiseInstance {
            n,
            ensemble: Ensemble::GaussianGoe,
            seed: 0,
            matrix: DMatrix::zeros(n, n),
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eigs: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        eigs.sort_by(f64::total_cmp);
        eigs
    }
}

/// Draws H for the given size, ensemble and seed. The upper triangle is
/// filled row by row from a single seed-addressed stream, so equal seeds
/// give bitwise-equal matrices.
pub fn sample_wigner(n: usize, ensemble: Ensemble, seed: u64) -> Result<NoiseInstance, MatrixError> {
    if n < 2 {
        return Err(MatrixError::TooSmall(n));
    }
    let mut rng = stream_rng(seed, 0);
    let scale = 1.0 / (n as f64).sqrt();
    let mut matrix = DMatrix::zeros(n, n);
    match ensemble {
        Ensemble::GaussianGoe => {
            let sqrt2 = 2.0_f64.sqrt();
            for i in 0..n {
                for j in i..n {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    let v = if i == j { sqrt2 * x } else { x } * scale;
                    matrix[(i, j)] = v;
                    matrix[(j, i)] = v;
                }
            }
        }
        Ensemble::Rademacher => {
            let sqrt2 = 2.0_f64.sqrt();
            for i in 0..n {
                for j in i..n {
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    let v = if i == j { sqrt2 * sign } else { sign } * scale;
                    matrix[(i, j)] = v;
                    matrix[(j, i)] = v;
                }
            }
        }
    }
    Ok(NoiseInstance {
        n,
        ensemble,
        seed,
        matrix,
    })
}

/// True when every eigenvalue lies in [-2 - delta, 2 + delta].
pub fn spectrum_in_interval(noise: &NoiseInstance, delta: f64) -> Result<bool, MatrixError> {
    if !(delta > 0.0) {
        return Err(MatrixError::InvalidDelta(delta));
    }
    let eigs = noise.eigenvalues();
    Ok(eigs
        .iter()
        .all(|&x| (-2.0 - delta..=2.0 + delta).contains(&x)))
}

/// Kolmogorov-Smirnov distance between the empirical spectral distribution
/// and the semicircle law.
pub fn ks_distance_to_semicircle(noise: &NoiseInstance) -> f64 {
    let eigs = noise.eigenvalues();
    let n = eigs.len() as f64;
    let mut worst = 0.0_f64;
    for (i, &x) in eigs.iter().enumerate() {
        let f = semicircle_cdf(x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        worst = worst.max(hi.abs()).max(lo.abs());
    }
    worst
}

/// Deterministic pair of unit vectors and a shift point.
#[derive(Clone, Debug)]
pub struct ResolventProbe {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub z: Complex64,
}

impl ResolventProbe {
    pub fn new(u: DVector<f64>, v: DVector<f64>, z: Complex64) -> Result<Self, MatrixError> {
        let (nu, nv) = (u.norm(), v.norm());
        if (nu - 1.0).abs() > 1e-12 || (nv - 1.0).abs() > 1e-12 {
            return Err(MatrixError::NotUnit {
                u_norm: nu,
                v_norm: nv,
            });
        }
        Ok(ResolventProbe { u, v, z })
    }

    /// Canonical direction e_k as a unit vector.
    pub fn canonical(n: usize, k: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        v
    }
}

/// <u, (H - z)^{-1} v> by dense complex factorization.
pub fn resolvent_element(
    noise: &NoiseInstance,
    probe: &ResolventProbe,
) -> Result<Complex64, MatrixError> {
    let n = noise.dim();
    if probe.u.len() != n || probe.v.len() != n {
        return Err(MatrixError::DimensionMismatch {
            probe: probe.u.len(),
            matrix: n,
        });
    }
    let mut shifted = noise.matrix.map(|x| Complex64::new(x, 0.0));
    for i in 0..n {
        shifted[(i, i)] -= probe.z;
    }
    let lu = shifted.clone().lu();
    // A vanishing pivot signals a shift sitting on the spectrum.
    let u_mat = lu.u();
    for i in 0..n {
        if u_mat[(i, i)].norm() < 1e-12 {
            return Err(MatrixError::SingularSystem);
        }
    }
    let rhs = probe.v.map(|x| Complex64::new(x, 0.0));
    let x = lu.solve(&rhs).ok_or(MatrixError::SingularSystem)?;
    let residual = (&shifted * &x - &rhs).norm();
    if residual > 1e-10 {
        return Err(MatrixError::SingularSystem);
    }
    let mut acc = Complex64::default();
    for i in 0..n {
        acc += probe.u[i] * x[i];
    }
    Ok(acc)
}

/// Tridiagonal reduction of one noise instance with the probe rows of the
/// orthogonal factor, ready to evaluate <e_a, (H - z)^{-1} e_b> at many
/// shifts in O(n) each.
pub struct ResolventFactor {
    diag: Vec<f64>,
    off: Vec<f64>,
    row_u: Vec<f64>,
    row_v: Vec<f64>,
}

impl ResolventFactor {
    /// Factor `noise` for probes along canonical directions `a` and `b`.
    pub fn new(noise: &NoiseInstance, a: usize, b: usize) -> ResolventFactor {
        let tri = noise.matrix.clone().symmetric_tridiagonalize();
        let (q, diag, off) = tri.unpack();
        let row_u = q.row(a).transpose().iter().copied().collect();
        let row_v = q.row(b).transpose().iter().copied().collect();
        ResolventFactor {
            diag: diag.iter().copied().collect(),
            off: off.iter().copied().collect(),
            row_u,
            row_v,
        }
    }

    /// <e_a, (H - z)^{-1} e_b> via a Thomas sweep on (T - z).
    pub fn element(&self, z: Complex64) -> Complex64 {
        let n = self.diag.len();
        let mut c_prime = vec![Complex64::default(); n];
        let mut d_prime = vec![Complex64::default(); n];
        let b0 = Complex64::new(self.diag[0], 0.0) - z;
        c_prime[0] = Complex64::new(self.off[0], 0.0) / b0;
        d_prime[0] = Complex64::new(self.row_v[0], 0.0) / b0;
        for i in 1..n {
            let a_i = Complex64::new(self.off[i - 1], 0.0);
            let denom = Complex64::new(self.diag[i], 0.0) - z - a_i * c_prime[i - 1];
            if i < n - 1 {
                c_prime[i] = Complex64::new(self.off[i], 0.0) / denom;
            }
            d_prime[i] = (Complex64::new(self.row_v[i], 0.0) - a_i * d_prime[i - 1]) / denom;
        }
        let mut x = d_prime[n - 1];
        let mut acc = self.row_u[n - 1] * x;
        for i in (0..n - 1).rev() {
            x = d_prime[i] - c_prime[i] * x;
            acc += self.row_u[i] * x;
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// u = v = e_1; the limit is G(z).
    UvEqual,
    /// u = e_1, v = e_2; the limit is zero.
    UvOrthogonal,
}

/// Per-size sup-deviation samples with their (p10, p50, p90) quantiles.
#[derive(Clone, Debug)]
pub struct ConcentrationReport {
    pub n_values: Vec<usize>,
    pub sup_errors: Vec<Vec<f64>>,
    pub quantiles: Vec<(f64, f64, f64)>,
}

/// For each size and trial, samples H, sweeps the contour and records
/// sup_z |<u, R(z) v> - <u, v> G(z)| for the fixed canonical probe pair.
/// Trial t of size index k draws from stream (k << 32) + t, so the report
/// does not depend on the parallel schedule.
pub fn concentration_sweep(
    n_values: &[usize],
    trials: usize,
    contour: &ContourGrid,
    pair_kind: PairKind,
    ensemble: Ensemble,
    base_seed: u64,
) -> ConcentrationReport {
    let mut sup_errors = Vec::with_capacity(n_values.len());
    for (k, &n) in n_values.iter().enumerate() {
        let errs: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let seed_mix = base_seed ^ (((k as u64) << 32) | t as u64).wrapping_mul(0x9e3779b97f4a7c15);
                let noise = sample_wigner(n, ensemble, seed_mix).expect("n >= 2");
                let (a, b) = match pair_kind {
                    PairKind::UvEqual => (0, 0),
                    PairKind::UvOrthogonal => (0, 1),
                };
                let inner = if a == b { 1.0 } else { 0.0 };
                let factor = ResolventFactor::new(&noise, a, b);
                let mut sup = 0.0_f64;
                for &z in &contour.points {
                    let g = semicircle_stieltjes(z).expect("contour avoids the support");
                    let dev = (factor.element(z) - inner * g).norm();
                    sup = sup.max(dev);
                }
                sup
            })
            .collect();
        sup_errors.push(errs);
    }
    let quantiles = sup_errors
        .iter()
        .map(|errs| {
            let mut sorted = errs.clone();
            sorted.sort_by(f64::total_cmp);
            (
                quantile_sorted(&sorted, 0.10),
                quantile_sorted(&sorted, 0.50),
                quantile_sorted(&sorted, 0.90),
            )
        })
        .collect();
    ConcentrationReport {
        n_values: n_values.to_vec(),
        sup_errors,
        quantiles,
    }
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

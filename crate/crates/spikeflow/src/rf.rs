//! Random-feature regression under gradient flow: per-instance spectral
//! measures, the closed-form risk trajectory they induce, and exact
//! linear-flow oracles to validate both.
//!
//! The trained layer follows da/dt = b - (H + l* I) a with H = Z^T Z / d,
//! b = Z^T Y / d and l* the rescaled ridge strength. Everything happens in
//! the eigenbasis of H: the risk curve is a finite sum over eigenvalue
//! point masses, which is the empirical stand-in for the limiting spectral
//! densities at finite width.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::RfError;
use crate::streams::stream_rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    /// Pass-through, for linear-algebra sanity checks.
    Identity,
}

impl Activation {
    fn apply(self, u: f64) -> f64 {
        match self {
            Activation::Tanh => u.tanh(),
            Activation::Relu => u.max(0.0),
            Activation::Identity => u,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" | "id" => Ok(Activation::Identity),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

/// Problem sizes via the aspect ratios N = ceil(psi1 d), n = ceil(psi2 d).
#[derive(Clone, Debug)]
pub struct RfConfig {
    pub d: usize,
    pub psi1: f64,
    pub psi2: f64,
    /// Ridge strength lambda >= 0.
    pub ridge: f64,
    pub activation: Activation,
    pub seed: u64,
}

impl RfConfig {
    pub fn validate(&self) -> Result<(), RfError> {
        if self.d < 4 {
            return Err(RfError::InvalidConfig(format!("d = {} < 4", self.d)));
        }
        if !(self.psi1 > 0.0) || !(self.psi2 > 0.0) {
            return Err(RfError::InvalidConfig(
                "aspect ratios must be positive".to_string(),
            ));
        }
        if !(self.ridge >= 0.0) {
            return Err(RfError::InvalidConfig(format!(
                "ridge = {} must be nonnegative",
                self.ridge
            )));
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        (self.psi1 * self.d as f64).ceil() as usize
    }

    pub fn sample_count(&self) -> usize {
        (self.psi2 * self.d as f64).ceil() as usize
    }

    /// Realized width ratio N/d; identities below hold exactly for this,
    /// not the requested psi1, when the ceiling rounds.
    pub fn ratio1(&self) -> f64 {
        self.feature_count() as f64 / self.d as f64
    }

    pub fn ratio2(&self) -> f64 {
        self.sample_count() as f64 / self.d as f64
    }

    /// Flow-rescaled ridge l* = lambda psi1 psi2 (realized ratios).
    pub fn lambda_star(&self) -> f64 {
        self.ridge * self.ratio1() * self.ratio2()
    }
}

/// A sampled problem with the eigendecomposition of its kernel.
#[derive(Clone, Debug)]
pub struct RfInstance {
    pub config: RfConfig,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub beta: DVector<f64>,
    pub features: DMatrix<f64>,
    pub z: DMatrix<f64>,
    /// Eigenvalues of H = Z^T Z / d, ascending.
    pub eigvals: DVector<f64>,
    /// Matching orthonormal eigenvectors as columns.
    pub eigvecs: DMatrix<f64>,
    /// b = Z^T Y / d expressed in the eigenbasis.
    pub b_eig: DVector<f64>,
    /// C_Y = ||Y||^2 / (2n).
    pub c_y: f64,
}

/// Point-mass spectral data driving the risk formulas: unit masses for the
/// trace measure and two weight sets for the source measure (the
/// beta-averaged form and the instance-exact projections of b).
#[derive(Clone, Debug)]
pub struct RfSpectralMeasures {
    pub eigvals: Vec<f64>,
    pub p0_masses: Vec<f64>,
    pub r_weights_avg: Vec<f64>,
    pub r_weights_inst: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightKind {
    BetaAveraged,
    InstanceExact,
}

impl RfSpectralMeasures {
    pub fn weights(&self, kind: WeightKind) -> &[f64] {
        match kind {
            WeightKind::BetaAveraged => &self.r_weights_avg,
            WeightKind::InstanceExact => &self.r_weights_inst,
        }
    }
}

/// Risk trajectory and its spectral components on a time grid.
#[derive(Clone, Debug)]
pub struct RfCurve {
    pub t: Vec<f64>,
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub risk: Vec<f64>,
}

/// Monte Carlo risk curve over random initial vectors.
#[derive(Clone, Debug)]
pub struct McRiskCurve {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

fn sample_sphere_row(rng: &mut rand_chacha::ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x * radius / norm).collect();
        }
    }
}

/// Samples the model, eigendecomposes the kernel and assembles both spectral
/// measures.
pub fn build_instance(config: &RfConfig) -> Result<(RfInstance, RfSpectralMeasures), RfError> {
    config.validate()?;
    let d = config.d;
    let n_feat = config.feature_count();
    let n_samp = config.sample_count();
    let df = d as f64;
    let mut rng = stream_rng(config.seed, 0);

    let beta = DVector::from_vec(sample_sphere_row(&mut rng, d, 1.0));
    let features = DMatrix::from_fn(n_feat, d, |_, _| 0.0);
    let mut features = features;
    for i in 0..n_feat {
        let row = sample_sphere_row(&mut rng, d, df.sqrt());
        for j in 0..d {
            features[(i, j)] = row[j];
        }
    }
    let mut x = DMatrix::zeros(n_samp, d);
    for i in 0..n_samp {
        let row = sample_sphere_row(&mut rng, d, df.sqrt());
        for j in 0..d {
            x[(i, j)] = row[j];
        }
    }
    let noise: Vec<f64> = (0..n_samp).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y = &x * &beta + DVector::from_vec(noise);

    let mut z = &x * features.transpose();
    z.apply(|v| *v = config.activation.apply(*v / df.sqrt()));
    if z.iter().any(|v| !v.is_finite()) {
        return Err(RfError::NonFiniteMatrix);
    }
    let kernel = z.transpose() * &z / df;
    let eigen = kernel.symmetric_eigen();

    // ascending order with eigenvectors permuted to match
    let mut order: Vec<usize> = (0..n_feat).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[i].total_cmp(&eigen.eigenvalues[j]));
    let eigvals = DVector::from_fn(n_feat, |i, _| eigen.eigenvalues[order[i]]);
    let mut eigvecs = DMatrix::zeros(n_feat, n_feat);
    for (new, &old) in order.iter().enumerate() {
        eigvecs.set_column(new, &eigen.eigenvectors.column(old));
    }

    let b = z.transpose() * &y / df;
    let b_eig = eigvecs.transpose() * &b;
    let c_y = y.norm_squared() / (2.0 * n_samp as f64);

    // Source weights: the beta-average contracts X beta beta^T X^T to
    // X X^T / d, leaving w_i = ||X^T Z v_i||^2 / d^3.
    let cross = x.transpose() * &z; // d x N
    let mut r_weights_avg = Vec::with_capacity(n_feat);
    let mut r_weights_inst = Vec::with_capacity(n_feat);
    for i in 0..n_feat {
        let proj = &cross * eigvecs.column(i);
        r_weights_avg.push(proj.norm_squared() / df.powi(3));
        r_weights_inst.push(b_eig[i] * b_eig[i]);
    }

    let measures = RfSpectralMeasures {
        eigvals: eigvals.iter().copied().collect(),
        p0_masses: vec![1.0; n_feat],
        r_weights_avg,
        r_weights_inst,
    };
    Ok((
        RfInstance {
            config: config.clone(),
            x,
            y,
            beta,
            features,
            z,
            eigvals,
            eigvecs,
            b_eig,
            c_y,
        },
        measures,
    ))
}

/// (1 - e^{-t u}) / u with its removable limit t at u = 0.
fn ramp(u: f64, t: f64) -> f64 {
    if u.abs() < 1e-12 {
        t
    } else {
        (1.0 - (-t * u).exp()) / u
    }
}

/// Risk trajectory from the point-mass measures.
///
/// The risk is assembled from the spectral display
///   C_Y + (1/(2 psi2)) sum (mu + l*) e^{-2t(mu + l*)}
///       - (1/(2 psi2)) sum w (1 - e^{-2t(mu + l*)}) / (mu + l*),
/// which is what the combination C_Y - (q0 - (p1 + l* p0)/2)/psi2 reduces to
/// for the component sums below.
pub fn rf_risk_curve(
    instance: &RfInstance,
    measures: &RfSpectralMeasures,
    lambda_star: f64,
    t_grid: &[f64],
    kind: WeightKind,
) -> Result<RfCurve, RfError> {
    let weights = measures.weights(kind);
    for (i, (&mu, &w)) in measures.eigvals.iter().zip(weights).enumerate() {
        let shifted = mu + lambda_star;
        if shifted < -1e-12 && w != 0.0 {
            return Err(RfError::NegativeMode {
                index: i,
                value: shifted,
            });
        }
    }
    let psi2 = instance.config.ratio2();
    let mut curve = RfCurve {
        t: t_grid.to_vec(),
        q0: Vec::with_capacity(t_grid.len()),
        p0: Vec::with_capacity(t_grid.len()),
        p1: Vec::with_capacity(t_grid.len()),
        risk: Vec::with_capacity(t_grid.len()),
    };
    for &t in t_grid {
        let mut q0 = 0.0;
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        let mut decay = 0.0;
        let mut source = 0.0;
        for i in 0..measures.eigvals.len() {
            let mu = measures.eigvals[i];
            let shifted = mu + lambda_star;
            let mass = measures.p0_masses[i];
            let w = weights[i];
            let phi = ramp(shifted, t);
            let e2 = (-2.0 * t * shifted).exp();
            q0 += w * phi;
            p0 += mass * e2 + w * phi * phi;
            p1 += mu * (mass * e2 + w * phi * phi);
            decay += mass * shifted * e2;
            source += w * ramp(shifted, 2.0 * t);
        }
        curve.q0.push(q0);
        curve.p0.push(p0);
        curve.p1.push(p1);
        curve
            .risk
            .push(instance.c_y + (decay - source) / (2.0 * psi2));
    }
    Ok(curve)
}

/// The combination route to the risk: C_Y - (q0 - (p1 + l* p0)/2) / psi2.
pub fn risk_from_components(
    instance: &RfInstance,
    lambda_star: f64,
    q0: f64,
    p0: f64,
    p1: f64,
) -> f64 {
    instance.c_y - (q0 - 0.5 * (p1 + lambda_star * p0)) / instance.config.ratio2()
}

/// Closed-form flow state at time t from initial vector `a0`, with its risk.
pub fn rf_flow_exact(
    instance: &RfInstance,
    lambda_star: f64,
    a0: &DVector<f64>,
    t: f64,
) -> (DVector<f64>, f64) {
    let coords0 = instance.eigvecs.transpose() * a0;
    let n_feat = instance.eigvals.len();
    let mut coords = DVector::zeros(n_feat);
    for i in 0..n_feat {
        let shifted = instance.eigvals[i] + lambda_star;
        coords[i] = (-t * shifted).exp() * coords0[i] + ramp(shifted, t) * instance.b_eig[i];
    }
    let risk = risk_in_eigenbasis(instance, lambda_star, &coords);
    (&instance.eigvecs * &coords, risk)
}

fn risk_in_eigenbasis(instance: &RfInstance, lambda_star: f64, coords: &DVector<f64>) -> f64 {
    let mut q0 = 0.0;
    let mut p0 = 0.0;
    let mut p1 = 0.0;
    for i in 0..coords.len() {
        q0 += instance.b_eig[i] * coords[i];
        p0 += coords[i] * coords[i];
        p1 += instance.eigvals[i] * coords[i] * coords[i];
    }
    risk_from_components(instance, lambda_star, q0, p0, p1)
}

/// Ridge estimator (H + l*)^{-1} b, the t -> inf fixed point of the flow.
pub fn ridge_estimator(instance: &RfInstance, lambda_star: f64) -> DVector<f64> {
    let n_feat = instance.eigvals.len();
    let coords = DVector::from_fn(n_feat, |i, _| {
        let shifted = instance.eigvals[i] + lambda_star;
        if shifted.abs() < 1e-14 {
            0.0
        } else {
            instance.b_eig[i] / shifted
        }
    });
    &instance.eigvecs * coords
}

/// Empirical risk of a second-layer vector straight from the definition:
/// ||Y - Z a||^2 / (2n) + lambda (N / 2d) ||a||^2. Independent of the
/// eigendecomposition, so it cross-checks the spectral routes.
pub fn empirical_risk(instance: &RfInstance, a: &DVector<f64>) -> f64 {
    let n_samp = instance.config.sample_count() as f64;
    let resid = &instance.y - &instance.z * a;
    resid.norm_squared() / (2.0 * n_samp)
        + instance.config.ridge * instance.config.ratio1() / 2.0 * a.norm_squared()
}

/// Expected risk over the random initial vector at t -> inf; the initial
/// coordinates decay away, leaving the ridge risk.
pub fn ridge_risk_expected(instance: &RfInstance, lambda_star: f64) -> f64 {
    let mut source = 0.0;
    for i in 0..instance.eigvals.len() {
        let shifted = instance.eigvals[i] + lambda_star;
        if shifted.abs() > 1e-14 {
            source += instance.b_eig[i] * instance.b_eig[i] / shifted;
        }
    }
    instance.c_y - source / (2.0 * instance.config.ratio2())
}

/// Max absolute gap, over the grid and all four tracked quantities, between
/// the spectral-measure curve and the initial-vector average of the exact
/// flow (computed analytically from E a0 a0^T = I).
///
/// With instance-exact weights this is a floating-point identity; with
/// beta-averaged weights it measures how well the projections of b have
/// concentrated.
pub fn rf_expectation_identity(
    instance: &RfInstance,
    measures: &RfSpectralMeasures,
    lambda_star: f64,
    t_grid: &[f64],
    kind: WeightKind,
) -> Result<f64, RfError> {
    let curve = rf_risk_curve(instance, measures, lambda_star, t_grid, kind)?;
    let mut worst = 0.0_f64;
    for (idx, &t) in t_grid.iter().enumerate() {
        let mut q0 = 0.0;
        let mut p0 = 0.0;
        let mut p1 = 0.0;
        for i in 0..instance.eigvals.len() {
            let mu = instance.eigvals[i];
            let shifted = mu + lambda_star;
            let phi = ramp(shifted, t);
            let b2 = instance.b_eig[i] * instance.b_eig[i];
            // E over a0 of the squared coordinate: e^{-2 t theta} + phi^2 b^2.
            let e2 = (-2.0 * t * shifted).exp();
            q0 += phi * b2;
            p0 += e2 + phi * phi * b2;
            p1 += mu * (e2 + phi * phi * b2);
        }
        let risk = risk_from_components(instance, lambda_star, q0, p0, p1);
        worst = worst
            .max((q0 - curve.q0[idx]).abs())
            .max((p0 - curve.p0[idx]).abs())
            .max((p1 - curve.p1[idx]).abs())
            .max((risk - curve.risk[idx]).abs());
    }
    Ok(worst)
}

/// Monte Carlo average of the exact-flow risk over initial vectors drawn
/// uniformly from the sphere of radius sqrt(N).
pub fn rf_flow_mc(
    instance: &RfInstance,
    lambda_star: f64,
    t_grid: &[f64],
    num_draws: usize,
    seed: u64,
) -> McRiskCurve {
    assert!(num_draws >= 2, "need at least two draws");
    let n_feat = instance.eigvals.len();
    let risks: Vec<Vec<f64>> = (0..num_draws as u64)
        .into_par_iter()
        .map(|draw| {
            let mut rng = stream_rng(seed, draw + 1);
            let a0 = DVector::from_vec(sample_sphere_row(
                &mut rng,
                n_feat,
                (n_feat as f64).sqrt(),
            ));
            let coords0 = instance.eigvecs.transpose() * &a0;
            t_grid
                .iter()
                .map(|&t| {
                    let mut coords = DVector::zeros(n_feat);
                    for i in 0..n_feat {
                        let shifted = instance.eigvals[i] + lambda_star;
                        coords[i] =
                            (-t * shifted).exp() * coords0[i] + ramp(shifted, t) * instance.b_eig[i];
                    }
                    risk_in_eigenbasis(instance, lambda_star, &coords)
                })
                .collect()
        })
        .collect();
    let mut mean = vec![0.0; t_grid.len()];
    let mut stderr = vec![0.0; t_grid.len()];
    for idx in 0..t_grid.len() {
        let m = risks.iter().map(|r| r[idx]).sum::<f64>() / num_draws as f64;
        let var = risks
            .iter()
            .map(|r| (r[idx] - m) * (r[idx] - m))
            .sum::<f64>()
            / (num_draws - 1) as f64;
        mean[idx] = m;
        stderr[idx] = (var / num_draws as f64).sqrt();
    }
    McRiskCurve {
        t: t_grid.to_vec(),
        mean,
        stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config(d: usize, psi1: f64, psi2: f64, ridge: f64) -> RfConfig {
        RfConfig {
            d,
            psi1,
            psi2,
            ridge,
            activation: Activation::Tanh,
            seed: 31,
        }
    }

    #[test]
    fn config_checks() {
        assert!(config(3, 1.0, 1.0, 0.1).validate().is_err());
        assert!(config(10, 0.0, 1.0, 0.1).validate().is_err());
        assert!(config(10, 1.0, 1.0, -0.1).validate().is_err());
        let c = config(10, 1.5, 2.0, 0.1);
        assert_eq!(c.feature_count(), 15);
        assert_eq!(c.sample_count(), 20);
        assert_relative_eq!(c.lambda_star(), 0.1 * 1.5 * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn instance_geometry() {
        let cfg = config(60, 1.5, 2.0, 0.1);
        let (inst, measures) = build_instance(&cfg).unwrap();
        assert_relative_eq!(inst.beta.norm(), 1.0, epsilon = 1e-12);
        for i in 0..cfg.sample_count() {
            assert_relative_eq!(inst.x.row(i).norm(), 60.0_f64.sqrt(), epsilon = 1e-10);
        }
        // kernel PSD and reconstructed by its eigensystem
        assert!(measures.eigvals.iter().all(|&m| m >= -1e-10));
        let kernel = inst.z.transpose() * &inst.z / 60.0;
        let rebuilt = &inst.eigvecs
            * DMatrix::from_diagonal(&inst.eigvals)
            * inst.eigvecs.transpose();
        assert!((kernel - rebuilt).abs().max() < 1e-8);
        // trace measure carries one unit per eigenvalue
        assert_relative_eq!(
            measures.p0_masses.iter().sum::<f64>(),
            cfg.feature_count() as f64,
            epsilon = 1e-12
        );
        assert!(measures.r_weights_avg.iter().all(|&w| w >= -1e-12));
    }

    #[test]
    fn identity_activation_matches_product_spectrum() {
        let mut cfg = config(40, 1.2, 1.6, 0.0);
        cfg.activation = Activation::Identity;
        let (inst, _) = build_instance(&cfg).unwrap();
        // Z = X F^T / sqrt(d), so H = F X^T X F^T / d^2.
        let d = 40.0;
        let direct = (&inst.features * inst.x.transpose() * &inst.x * inst.features.transpose())
            / (d * d);
        let mut expected: Vec<f64> = direct.symmetric_eigenvalues().iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in inst.eigvals.iter().zip(&expected) {
            assert_relative_eq!(a, b, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn curve_endpoints() {
        let cfg = config(50, 1.0, 1.5, 0.1);
        let (inst, measures) = build_instance(&cfg).unwrap();
        let l = cfg.lambda_star();
        let curve = rf_risk_curve(&inst, &measures, l, &[0.0], WeightKind::InstanceExact).unwrap();
        assert_eq!(curve.q0[0], 0.0);
        assert_relative_eq!(curve.p0[0], cfg.feature_count() as f64, epsilon = 1e-10);
        // Risk at t = 0 averaged over a0: C_Y + sum (mu + l*) / (2 psi2).
        let expect = inst.c_y
            + measures
                .eigvals
                .iter()
                .map(|&m| m + l)
                .sum::<f64>()
                / (2.0 * cfg.ratio2());
        assert_relative_eq!(curve.risk[0], expect, epsilon = 1e-10);
    }

    #[test]
    fn risk_routes_agree() {
        let cfg = config(50, 1.0, 1.5, 0.1);
        let (inst, measures) = build_instance(&cfg).unwrap();
        let l = cfg.lambda_star();
        let grid: Vec<f64> = (0..10).map(|i| 0.3 * i as f64).collect();
        let curve = rf_risk_curve(&inst, &measures, l, &grid, WeightKind::InstanceExact).unwrap();
        for i in 0..grid.len() {
            let combo =
                risk_from_components(&inst, l, curve.q0[i], curve.p0[i], curve.p1[i]);
            assert!(
                (combo - curve.risk[i]).abs() <= 1e-10,
                "routes differ at t = {}: {} vs {}",
                grid[i],
                combo,
                curve.risk[i]
            );
        }
    }

    #[test]
    fn risk_monotone_and_bounded_below_by_ridge_risk() {
        let cfg = config(60, 1.4, 1.1, 0.2);
        let (inst, measures) = build_instance(&cfg).unwrap();
        let l = cfg.lambda_star();
        let grid: Vec<f64> = (0..60).map(|i| 0.25 * i as f64).collect();
        let curve = rf_risk_curve(&inst, &measures, l, &grid, WeightKind::InstanceExact).unwrap();
        let floor = ridge_risk_expected(&inst, l);
        for w in curve.risk.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "risk must not increase");
        }
        for &r in &curve.risk {
            assert!(r >= floor - 1e-9);
        }
        // q0 non-decreasing and bounded by its ridge limit.
        let cap: f64 = measures
            .r_weights_inst
            .iter()
            .zip(&measures.eigvals)
            .map(|(w, m)| w / (m + l))
            .sum();
        for w in curve.q0.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        for &v in &curve.q0 {
            assert!(v <= cap + 1e-10);
        }
    }

    #[test]
    fn flow_exact_at_zero_and_infinity() {
        let cfg = config(40, 1.0, 1.5, 0.1);
        let (inst, _) = build_instance(&cfg).unwrap();
        let l = cfg.lambda_star();
        let n_feat = cfg.feature_count();
        let mut rng = stream_rng(5, 9);
        let a0 = DVector::from_vec(sample_sphere_row(&mut rng, n_feat, (n_feat as f64).sqrt()));
        let (back, _) = rf_flow_exact(&inst, l, &a0, 0.0);
        assert!((back - &a0).norm() < 1e-10);
        // a0 = 0 flows to the ridge solution.
        let zero = DVector::zeros(n_feat);
        let t_inf = 1e3 / (inst.eigvals[0] + l).max(1e-3);
        let (limit, _) = rf_flow_exact(&inst, l, &zero, t_inf);
        let ridge = ridge_estimator(&inst, l);
        assert!(
            (&limit - &ridge).norm() / ridge.norm() < 1e-8,
            "flow limit vs ridge solution"
        );
        // Direct-definition risk agrees with the eigenbasis route.
        let (_, risk) = rf_flow_exact(&inst, l, &ridge, 0.0);
        assert_relative_eq!(risk, empirical_risk(&inst, &ridge), epsilon = 1e-10);
    }

    #[test]
    fn flow_matches_rk4_integration() {
        let cfg = config(30, 1.0, 1.2, 0.15);
        let (inst, _) = build_instance(&cfg).unwrap();
        let l = cfg.lambda_star();
        let n_feat = cfg.feature_count();
        let mut rng = stream_rng(6, 2);
        let a0 = DVector::from_vec(sample_sphere_row(&mut rng, n_feat, (n_feat as f64).sqrt()));
        // da/dt = b - (H + l) a integrated with RK4 at dt = 1e-3 to t = 1.
        let kernel = inst.z.transpose() * &inst.z / 30.0;
        let b = inst.z.transpose() * &inst.y / 30.0;
        let f = |a: &DVector<f64>| &b - (&kernel * a + a * l);
        let mut a = a0.clone();
        let dt = 1e-3;
        for _ in 0..1000 {
            let k1 = f(&a);
            let k2 = f(&(&a + &k1 * (0.5 * dt)));
            let k3 = f(&(&a + &k2 * (0.5 * dt)));
            let k4 = f(&(&a + &k3 * dt));
            a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        }
        let (exact, _) = rf_flow_exact(&inst, l, &a0, 1.0);
        assert!((&a - &exact).norm() < 1e-6, "gap {}", (&a - &exact).norm());
    }

    #[test]
    fn expectation_identity_is_exact_for_instance_weights() {
        let cfg = config(50, 1.0, 1.5, 0.1);
        let (inst, measures) = build_instance(&cfg).unwrap();
        let l = cfg.lambda_star();
        let gap = rf_expectation_identity(
            &inst,
            &measures,
            l,
            &[0.0, 0.5, 1.0, 5.0],
            WeightKind::InstanceExact,
        )
        .unwrap();
        assert!(gap <= 1e-8, "identity gap {gap}");
        // lambda = 0 with a strictly positive spectrum behaves the same.
        let mut cfg0 = config(50, 0.8, 1.5, 0.0);
        cfg0.seed = 77;
        let (inst0, measures0) = build_instance(&cfg0).unwrap();
        if inst0.eigvals[0] > 1e-8 {
            let gap0 = rf_expectation_identity(
                &inst0,
                &measures0,
                0.0,
                &[0.0, 0.5, 1.0, 5.0],
                WeightKind::InstanceExact,
            )
            .unwrap();
            assert!(gap0 <= 1e-8, "ridge-free gap {gap0}");
        }
    }

    #[test]
    fn beta_average_concentrates_with_dimension() {
        let grid = [0.0, 0.5, 1.0, 2.0];
        let mut medians = Vec::new();
        for &d in &[50usize, 100, 200] {
            let mut gaps = Vec::new();
            for seed in 0..10 {
                let mut cfg = config(d, 1.0, 1.5, 0.1);
                cfg.seed = 1000 + seed;
                let (inst, measures) = build_instance(&cfg).unwrap();
                let gap = rf_expectation_identity(
                    &inst,
                    &measures,
                    cfg.lambda_star(),
                    &grid,
                    WeightKind::BetaAveraged,
                )
                .unwrap();
                gaps.push(gap);
            }
            gaps.sort_by(f64::total_cmp);
            medians.push(0.5 * (gaps[4] + gaps[5]));
        }
        assert!(
            medians[2] < medians[0],
            "median identity gap should shrink with d: {medians:?}"
        );
    }

    #[test]
    fn mc_average_brackets_spectral_curve() {
        let cfg = config(60, 1.0, 1.5, 0.1);
        let (inst, measures) = build_instance(&cfg).unwrap();
        let l = cfg.lambda_star();
        let grid: Vec<f64> = (0..8).map(|i| 0.5 * i as f64).collect();
        let mc = rf_flow_mc(&inst, l, &grid, 150, 9);
        let curve = rf_risk_curve(&inst, &measures, l, &grid, WeightKind::InstanceExact).unwrap();
        assert!(mc.stderr[0] > 0.0, "risk at t = 0 varies across draws");
        for i in 0..grid.len() {
            let gap = (mc.mean[i] - curve.risk[i]).abs();
            assert!(
                gap <= 3.0 * mc.stderr[i].max(1e-12),
                "t = {}: gap {} > 3 se {}",
                grid[i],
                gap,
                mc.stderr[i]
            );
        }
        // reproducibility
        let again = rf_flow_mc(&inst, l, &grid, 150, 9);
        assert_eq!(mc.mean, again.mean);
    }

    #[test]
    fn stieltjes_inversion_recovers_mass() {
        // Smoothed inversion of the trace measure's transform recovers the
        // total mass within 1%.
        let cfg = config(50, 1.2, 1.5, 0.1);
        let (_, measures) = build_instance(&cfg).unwrap();
        let eps = 1e-3;
        let lo = measures.eigvals.first().unwrap() - 1.0;
        let hi = measures.eigvals.last().unwrap() + 1.0;
        let steps = 20000;
        let du = (hi - lo) / steps as f64;
        let mut mass = 0.0;
        for k in 0..=steps {
            let u = lo + du * k as f64;
            let mut im = 0.0;
            for &mu in &measures.eigvals {
                // Im 1/(mu - (u + i eps)) = eps / ((mu - u)^2 + eps^2)
                im += eps / ((mu - u) * (mu - u) + eps * eps);
            }
            let weight = if k == 0 || k == steps { 0.5 } else { 1.0 };
            mass += weight * im * du / std::f64::consts::PI;
        }
        let total = measures.p0_masses.iter().sum::<f64>();
        assert!(
            (mass - total).abs() / total < 0.01,
            "recovered {mass} of {total}"
        );
    }
}

//! Independent numerical route to the limiting dynamics: the coupled
//! integro-differential system for the resolvent generating functions,
//! discretized on a circular contour and stepped with classical RK4.
//!
//! The contour encloses the asymptotic spectrum [-2, 2] with margin; the
//! two moment functionals that close the system,
//!
//!   q = -(1/2 pi i) oint Q(z) dz,     p1 = -(1/2 pi i) oint z P(z) dz,
//!
//! become plain averages over the equispaced grid points (trapezoid on a
//! periodic analytic integrand, so the discretization error is below 1e-12
//! at 256 points). This solver shares no code path with the closed-form
//! evaluators in `theory` and is the cross-validation oracle for them.

use num_complex::Complex64;

use crate::error::{IdeError, MatrixError};
use crate::matrix::NoiseInstance;
use crate::semicircle::semicircle_stieltjes;
use crate::theory::ScenarioParams;

/// Discretized circle |z| = radius with radius > 2 + margin.
#[derive(Clone, Debug)]
pub struct ContourGrid {
    pub radius: f64,
    pub margin: f64,
    pub points: Vec<Complex64>,
}

impl ContourGrid {
    pub fn new(radius: f64, margin: f64, num_points: usize) -> Result<Self, IdeError> {
        if !(margin > 0.0) || radius <= 2.0 + margin {
            return Err(IdeError::InvalidRadius {
                radius,
                min_radius: 2.0 + margin.max(0.0),
            });
        }
        if num_points < 64 {
            return Err(IdeError::TooFewPoints(num_points));
        }
        let points = (0..num_points)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * j as f64 / num_points as f64;
                Complex64::from_polar(radius, theta)
            })
            .collect();
        Ok(ContourGrid {
            radius,
            margin,
            points,
        })
    }

    /// Defaults used throughout: radius 2.5, margin 0.4, 256 points.
    pub fn standard() -> Self {
        ContourGrid::new(2.5, 0.4, 256).expect("standard grid is valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Snapshot of the contour solution at one time.
#[derive(Clone, Debug)]
pub struct IdeState {
    pub tau: f64,
    pub q_values: Vec<Complex64>,
    pub p_values: Vec<Complex64>,
    pub r_values: Vec<Complex64>,
    pub q: f64,
    pub p1: f64,
}

/// Real moment extracted from contour data, with the imaginary residue kept
/// for diagnostics: a large residue means the grid is too coarse or the
/// data has lost conjugate symmetry.
#[derive(Clone, Copy, Debug)]
pub struct ContourMoment {
    pub value: f64,
    pub imag_residue: f64,
}

/// -(1/2 pi i) oint z^k V(z) dz by the trapezoid rule on the circle,
/// which reduces to -(1/M) sum_j z_j^{k+1} v_j.
pub fn contour_moment(
    values: &[Complex64],
    grid: &ContourGrid,
    power: u32,
) -> Result<ContourMoment, IdeError> {
    if values.len() != grid.len() {
        return Err(IdeError::LengthMismatch {
            values: values.len(),
            points: grid.len(),
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (z, v) in grid.points.iter().zip(values) {
        acc += z.powu(power + 1) * v;
    }
    acc = -acc / grid.len() as f64;
    Ok(ContourMoment {
        value: acc.re,
        imag_residue: acc.im.abs(),
    })
}

/// `contour_moment` that rejects a noticeable imaginary residue.
pub fn contour_integral(
    values: &[Complex64],
    grid: &ContourGrid,
    power: u32,
) -> Result<f64, IdeError> {
    let m = contour_moment(values, grid, power)?;
    if m.imag_residue > 1e-8 {
        return Err(IdeError::ImaginaryResidue {
            residue: m.imag_residue,
        });
    }
    Ok(m.value)
}

/// Limiting initial data on the contour: Q = alpha G, P = G, R = G with G
/// the semicircle Stieltjes transform.
pub fn init_state(params: &ScenarioParams, grid: &ContourGrid) -> IdeState {
    let g: Vec<Complex64> = grid
        .points
        .iter()
        .map(|&z| semicircle_stieltjes(z).expect("contour avoids the support"))
        .collect();
    let q_values: Vec<Complex64> = g.iter().map(|&v| params.alpha * v).collect();
    let q = contour_moment(&q_values, grid, 0).expect("aligned").value;
    let p1 = contour_moment(&g, grid, 1).expect("aligned").value;
    IdeState {
        tau: 0.0,
        q_values,
        p_values: g.clone(),
        r_values: g,
        q,
        p1,
    }
}

struct Workspace {
    dq: [Vec<Complex64>; 4],
    dp: [Vec<Complex64>; 4],
    q_stage: Vec<Complex64>,
    p_stage: Vec<Complex64>,
}

/// RK4 integration of the coupled contour system, reporting states at every
/// grid time in `params.tau_grid`.
///
/// The moment functionals q and p1 are recomputed inside each RK4 stage;
/// lagging them breaks the fourth-order convergence of the nonlinear
/// coupling. Steps never exceed `dt` and always land exactly on the
/// requested grid times.
pub fn solve_ide(
    params: &ScenarioParams,
    grid: &ContourGrid,
    tau_max: f64,
    dt: f64,
) -> Result<Vec<IdeState>, IdeError> {
    if !(dt > 0.0) || dt > 1e-2 {
        return Err(IdeError::InvalidTimeStep(dt));
    }
    if !(tau_max > 0.0) || tau_max > 100.0 {
        return Err(IdeError::InvalidHorizon(tau_max));
    }
    let m = grid.len();
    let sqrt_lambda = params.lambda.sqrt();
    let r_values: Vec<Complex64> = grid
        .points
        .iter()
        .map(|&z| semicircle_stieltjes(z).expect("contour avoids the support"))
        .collect();

    let state0 = init_state(params, grid);
    let mut q_vals = state0.q_values.clone();
    let mut p_vals = state0.p_values.clone();
    let mut out = Vec::new();
    if params.tau_grid[0] == 0.0 {
        out.push(state0);
    }

    let mut ws = Workspace {
        dq: std::array::from_fn(|_| vec![Complex64::default(); m]),
        dp: std::array::from_fn(|_| vec![Complex64::default(); m]),
        q_stage: vec![Complex64::default(); m],
        p_stage: vec![Complex64::default(); m],
    };

    let derivative = |q_f: &[Complex64],
                      p_f: &[Complex64],
                      dq: &mut Vec<Complex64>,
                      dp: &mut Vec<Complex64>| {
        let mut q_acc = Complex64::default();
        let mut p1_acc = Complex64::default();
        for j in 0..m {
            let z = grid.points[j];
            q_acc += z * q_f[j];
            p1_acc += z * z * p_f[j];
        }
        let q = (-q_acc / m as f64).re;
        let p1 = (-p1_acc / m as f64).re;
        let damping = q * q + p1 / sqrt_lambda;
        for j in 0..m {
            let z = grid.points[j];
            dq[j] = q * r_values[j] + (z * q_f[j] + q) / sqrt_lambda - damping * q_f[j];
            dp[j] = 2.0 * (q * q_f[j] + (z * p_f[j] + 1.0) / sqrt_lambda - damping * p_f[j]);
        }
    };

    let mut tau = 0.0;
    for &target in params.tau_grid.iter().filter(|&&t| t > 0.0) {
        let target = target.min(tau_max);
        let span = target - tau;
        let substeps = (span / dt).ceil().max(1.0) as usize;
        let h = span / substeps as f64;
        for _ in 0..substeps {
            derivative(&q_vals, &p_vals, &mut ws.dq[0], &mut ws.dp[0]);
            for j in 0..m {
                ws.q_stage[j] = q_vals[j] + 0.5 * h * ws.dq[0][j];
                ws.p_stage[j] = p_vals[j] + 0.5 * h * ws.dp[0][j];
            }
            derivative(&ws.q_stage, &ws.p_stage, &mut ws.dq[1], &mut ws.dp[1]);
            for j in 0..m {
                ws.q_stage[j] = q_vals[j] + 0.5 * h * ws.dq[1][j];
                ws.p_stage[j] = p_vals[j] + 0.5 * h * ws.dp[1][j];
            }
            derivative(&ws.q_stage, &ws.p_stage, &mut ws.dq[2], &mut ws.dp[2]);
            for j in 0..m {
                ws.q_stage[j] = q_vals[j] + h * ws.dq[2][j];
                ws.p_stage[j] = p_vals[j] + h * ws.dp[2][j];
            }
            derivative(&ws.q_stage, &ws.p_stage, &mut ws.dq[3], &mut ws.dp[3]);
            for j in 0..m {
                q_vals[j] +=
                    h / 6.0 * (ws.dq[0][j] + 2.0 * ws.dq[1][j] + 2.0 * ws.dq[2][j] + ws.dq[3][j]);
                p_vals[j] +=
                    h / 6.0 * (ws.dp[0][j] + 2.0 * ws.dp[1][j] + 2.0 * ws.dp[2][j] + ws.dp[3][j]);
            }
            tau += h;
            let q = contour_moment(&q_vals, grid, 0).expect("aligned").value;
            let p1 = contour_moment(&p_vals, grid, 1).expect("aligned").value;
            if q.abs() > 1.01 || !p1.is_finite() || !q.is_finite() {
                return Err(IdeError::Diverged {
                    tau,
                    q_abs: q.abs(),
                    p1_finite: p1.is_finite(),
                });
            }
        }
        tau = target;
        let q = contour_moment(&q_vals, grid, 0).expect("aligned").value;
        let p1 = contour_moment(&p_vals, grid, 1).expect("aligned").value;
        out.push(IdeState {
            tau,
            q_values: q_vals.clone(),
            p_values: p_vals.clone(),
            r_values: r_values.clone(),
            q,
            p1,
        });
        if (tau - tau_max).abs() < 1e-12 {
            break;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// stationary solutions

/// Stationary value of p1, either an isolated point or a free interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum P1Stationary {
    Point(f64),
    Interval(f64, f64),
}

/// One root family of the stationary system.
#[derive(Clone, Debug)]
pub struct StationaryBranch {
    pub q_inf: f64,
    pub p1_inf: P1Stationary,
    pub attainable: bool,
    pub condition: String,
}

/// All stationary branches of the contour system at a given lambda.
///
/// The q = 0 family leaves p1 free in [-2, 2] and is reached from zero
/// initial overlap. The spike branches q^2 = 1 - 1/lambda (lambda >= 1,
/// attainable, p1 = 2/sqrt(lambda)) and q^2 = (1/lambda)(1/lambda - 1)
/// (lambda < 1, never reached by the flow) complete the set.
pub fn stationary_solutions(lambda: f64) -> Vec<StationaryBranch> {
    let mut branches = vec![StationaryBranch {
        q_inf: 0.0,
        p1_inf: P1Stationary::Interval(-2.0, 2.0),
        attainable: true,
        condition: "reached from zero initial overlap".to_string(),
    }];
    if lambda >= 1.0 {
        let q = (1.0 - 1.0 / lambda).sqrt();
        let p1 = 2.0 / lambda.sqrt();
        for sign in [1.0, -1.0] {
            branches.push(StationaryBranch {
                q_inf: sign * q,
                p1_inf: P1Stationary::Point(p1),
                attainable: true,
                condition: "large-time limit for nonzero initial overlap".to_string(),
            });
        }
    } else {
        let q2 = (1.0 / lambda) * (1.0 / lambda - 1.0);
        let p1 = 2.0 / lambda.sqrt() + lambda.sqrt() - 1.0 / (lambda * lambda.sqrt());
        for sign in [1.0, -1.0] {
            branches.push(StationaryBranch {
                q_inf: sign * q2.sqrt(),
                p1_inf: P1Stationary::Point(p1),
                attainable: false,
                condition: "formal root, not reached by the flow".to_string(),
            });
        }
    }
    branches
}

/// Maximum residual of a branch substituted into the stationary equations,
/// evaluated at the contour points. The q = 0 interval branch is probed at
/// a representative interior p1.
pub fn stationary_residual(branch: &StationaryBranch, lambda: f64, grid: &ContourGrid) -> f64 {
    let sqrt_lambda = lambda.sqrt();
    let q = branch.q_inf;
    let p1 = match branch.p1_inf {
        P1Stationary::Point(v) => v,
        P1Stationary::Interval(lo, hi) => 0.5 * (lo + hi),
    };
    let pole = sqrt_lambda * q * q + p1;
    let mut worst: f64 = 0.0;
    for &z in &grid.points {
        let g = semicircle_stieltjes(z).expect("contour avoids the support");
        let (q_inf_z, p_inf_z) = if q == 0.0 {
            (Complex64::default(), 1.0 / (Complex64::new(p1, 0.0) - z))
        } else {
            let num = sqrt_lambda * g + 1.0;
            let den = Complex64::new(pole, 0.0) - z;
            let q_z = q * num / den;
            let p_z = q * q * sqrt_lambda * num / (den * den) + 1.0 / den;
            (q_z, p_z)
        };
        let damping = q * q + p1 / sqrt_lambda;
        let res_q = q * g + (z * q_inf_z + q) / sqrt_lambda - damping * q_inf_z;
        let res_p = q * q_inf_z + (z * p_inf_z + 1.0) / sqrt_lambda - damping * p_inf_z;
        worst = worst.max(res_q.norm()).max(res_p.norm());
    }
    worst
}

// ---------------------------------------------------------------------------
// landscape check

/// Critical-point census of the finite-n cost landscape on the sphere.
#[derive(Clone, Debug)]
pub struct LandscapeReport {
    /// |<top eigenvector, theta*>| / n with both on the sqrt(n) sphere.
    pub top_overlap: f64,
    /// Largest covariant-gradient residual over all critical points.
    pub max_gradient_residual: f64,
    /// Smallest tangent Hessian eigenvalue at the top eigenvector.
    pub top_hessian_min: f64,
    /// Number of critical points with at least one strictly negative
    /// tangent Hessian eigenvalue.
    pub saddle_count: usize,
    /// Set when an eigenvalue gap falls below 1e-10.
    pub degenerate_spectrum: bool,
}

/// Verifies the strict-saddle structure of A = sqrt(lambda)/n theta* theta*^T + H:
/// eigenvectors are critical points, the top one is the only minimum, and
/// every other one is a strict saddle.
pub fn landscape_check(
    noise: &NoiseInstance,
    lambda: f64,
    theta_star: &nalgebra::DVector<f64>,
) -> Result<LandscapeReport, MatrixError> {
    let n = noise.dim();
    if n > 400 {
        return Err(MatrixError::LandscapeTooLarge(n));
    }
    if theta_star.len() != n {
        return Err(MatrixError::DimensionMismatch {
            probe: theta_star.len(),
            matrix: n,
        });
    }
    let nf = n as f64;
    let mut a = noise.matrix().clone();
    // rank-one spike (sqrt(lambda)/n) theta* theta*^T
    let scale = lambda.sqrt() / nf;
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] += scale * theta_star[i] * theta_star[j];
        }
    }
    let eigen = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[i].total_cmp(&eigen.eigenvalues[j]));
    let top = order[n - 1];

    let mut degenerate = false;
    for w in order.windows(2) {
        if (eigen.eigenvalues[w[1]] - eigen.eigenvalues[w[0]]).abs() < 1e-10 {
            degenerate = true;
        }
    }

    // Critical point: A v = alpha v implies the covariant gradient
    // (<v, A v>/n) v - A v vanishes on the sqrt(n) sphere.
    let mut max_grad = 0.0_f64;
    for k in 0..n {
        let v = eigen.eigenvectors.column(k) * nf.sqrt();
        let av = &a * &v;
        let rayleigh = v.dot(&av) / nf;
        let residual = (&v * rayleigh - av).norm() / nf.sqrt();
        max_grad = max_grad.max(residual);
    }

    // Tangent Hessian at eigenvector v_i has spectrum {alpha_i - alpha_j}.
    let alpha_top = eigen.eigenvalues[top];
    let mut top_hessian_min = f64::INFINITY;
    let mut saddle_count = 0;
    for &i in &order {
        if i == top {
            for &j in &order {
                if j != top {
                    top_hessian_min = top_hessian_min.min(alpha_top - eigen.eigenvalues[j]);
                }
            }
        } else {
            // alpha_i - alpha_top < 0 makes v_i a strict saddle.
            if eigen.eigenvalues[i] - alpha_top < -1e-8 {
                saddle_count += 1;
            }
        }
    }

    let top_vec = eigen.eigenvectors.column(top);
    let top_overlap = (top_vec.dot(&(theta_star / nf.sqrt()))).abs();
    Ok(LandscapeReport {
        top_overlap,
        max_gradient_residual: max_grad,
        top_hessian_min,
        saddle_count,
        degenerate_spectrum: degenerate,
    })
}

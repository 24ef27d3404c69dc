//! Discrete projected gradient descent on the sphere for the finite-size
//! spiked model.
//!
//! Each update takes the unprojected gradient step
//! theta' = theta + (dt / n) Y theta and rescales back to the sqrt(n)
//! sphere; the renormalization agrees with the tangential projection to
//! O(dt^2). The data matrix action Y theta = theta* <theta*, theta> +
//! (n / sqrt(lambda)) H theta is applied without materializing Y.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::SimError;
use crate::matrix::{quantile_sorted, sample_wigner, Ensemble};

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub n: usize,
    pub lambda: f64,
    pub alpha: f64,
    /// Time step directly in the rescaled time unit.
    pub dt: f64,
    pub steps: usize,
    pub runs: usize,
    pub ensemble: Ensemble,
    pub base_seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 2 {
            return Err(SimError::InvalidConfig(format!("n = {} < 2", self.n)));
        }
        if !(self.lambda > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "lambda = {} must be positive",
                self.lambda
            )));
        }
        if self.alpha.abs() > 1.0 {
            return Err(SimError::InvalidConfig(format!(
                "|alpha| = {} exceeds 1",
                self.alpha.abs()
            )));
        }
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if self.steps == 0 || self.runs == 0 {
            return Err(SimError::InvalidConfig(
                "steps and runs must be nonzero".to_string(),
            ));
        }
        Ok(())
    }

    pub fn tau_max(&self) -> f64 {
        self.dt * self.steps as f64
    }
}

/// One trajectory with its recorded observables.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub tau: Vec<f64>,
    pub q: Vec<f64>,
    pub p1: Vec<f64>,
    pub cost: Vec<f64>,
    /// max over recorded steps of | ||theta||^2 / n - 1 |.
    pub norm_drift: f64,
}

/// Pointwise quantiles over an ensemble of runs.
#[derive(Clone, Debug)]
pub struct EnsembleStats {
    pub tau: Vec<f64>,
    pub q_quantiles: QuantileBand,
    pub cost_quantiles: QuantileBand,
    pub p1_quantiles: QuantileBand,
}

#[derive(Clone, Debug)]
pub struct QuantileBand {
    pub p10: Vec<f64>,
    pub p50: Vec<f64>,
    pub p90: Vec<f64>,
}

/// Deterministic initial pair: theta* = sqrt(n) e1 and theta0 on the sphere
/// with exact initial overlap alpha along e1, remainder along e2.
pub fn init_vectors(n: usize, alpha: f64) -> (DVector<f64>, DVector<f64>) {
    assert!(n >= 2 && alpha.abs() <= 1.0);
    let root_n = (n as f64).sqrt();
    let mut theta_star = DVector::zeros(n);
    theta_star[0] = root_n;
    let mut theta0 = DVector::zeros(n);
    theta0[0] = alpha * root_n;
    theta0[1] = (1.0 - alpha * alpha).sqrt() * root_n;
    (theta0, theta_star)
}

/// One update: unprojected gradient half-step then exact renormalization to
/// the sqrt(n) sphere. `y_apply` must return Y theta.
pub fn gd_step<F>(theta: &mut DVector<f64>, y_apply: F, n: usize, dt: f64) -> Result<(), SimError>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let drift = y_apply(theta) * (dt / n as f64);
    *theta += drift;
    let norm = theta.norm();
    if norm == 0.0 {
        return Err(SimError::ZeroVector);
    }
    *theta *= (n as f64).sqrt() / norm;
    Ok(())
}

/// Simulates one seeded run, recording q, p1 and the cost at every step
/// (including the initial point).
pub fn simulate_run(config: &SimConfig, run_index: u64) -> Result<RunTrace, SimError> {
    config.validate()?;
    let n = config.n;
    let nf = n as f64;
    let noise = sample_wigner(n, config.ensemble, config.base_seed ^ run_index.wrapping_mul(0x9e3779b97f4a7c15))
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let h = noise.matrix();
    let (mut theta, theta_star) = init_vectors(n, config.alpha);
    let noise_bias = (theta_star.dot(&(h * &theta_star))) / nf;
    let cost_offset = 1.0 + noise_bias / config.lambda.sqrt();

    let points = config.steps + 1;
    let mut trace = RunTrace {
        tau: Vec::with_capacity(points),
        q: Vec::with_capacity(points),
        p1: Vec::with_capacity(points),
        cost: Vec::with_capacity(points),
        norm_drift: 0.0,
    };
    let noise_gain = nf / config.lambda.sqrt();
    let record = |theta: &DVector<f64>, tau: f64, trace: &mut RunTrace| {
        let q = theta_star.dot(theta) / nf;
        let p1 = theta.dot(&(h * theta)) / nf;
        trace.tau.push(tau);
        trace.q.push(q);
        trace.p1.push(p1);
        trace.cost.push(cost_offset - (q * q + p1 / config.lambda.sqrt()));
        let drift = (theta.norm_squared() / nf - 1.0).abs();
        if drift > trace.norm_drift {
            trace.norm_drift = drift;
        }
    };
    record(&theta, 0.0, &mut trace);
    for step in 1..=config.steps {
        gd_step(
            &mut theta,
            |t| &theta_star * theta_star.dot(t) + (h * t) * noise_gain,
            n,
            config.dt,
        )?;
        record(&theta, config.dt * step as f64, &mut trace);
    }
    Ok(trace)
}

/// Runs the whole ensemble (in parallel) and aggregates pointwise quantiles.
/// Per-run randomness is addressed by (base_seed, run index), so the result
/// does not depend on the thread schedule.
pub fn ensemble(config: &SimConfig) -> Result<EnsembleStats, SimError> {
    config.validate()?;
    if config.runs < 2 {
        return Err(SimError::InvalidConfig(
            "ensemble needs at least 2 runs".to_string(),
        ));
    }
    let traces: Vec<RunTrace> = (0..config.runs as u64)
        .into_par_iter()
        .map(|run| simulate_run(config, run))
        .collect::<Result<_, _>>()?;
    let points = traces[0].tau.len();
    let band = |extract: &dyn Fn(&RunTrace) -> &Vec<f64>| {
        let mut p10 = Vec::with_capacity(points);
        let mut p50 = Vec::with_capacity(points);
        let mut p90 = Vec::with_capacity(points);
        let mut column = vec![0.0; traces.len()];
        for i in 0..points {
            for (r, tr) in traces.iter().enumerate() {
                column[r] = extract(tr)[i];
            }
            column.sort_by(f64::total_cmp);
            p10.push(quantile_sorted(&column, 0.10));
            p50.push(quantile_sorted(&column, 0.50));
            p90.push(quantile_sorted(&column, 0.90));
        }
        QuantileBand { p10, p50, p90 }
    };
    Ok(EnsembleStats {
        tau: traces[0].tau.clone(),
        q_quantiles: band(&|t| &t.q),
        cost_quantiles: band(&|t| &t.cost),
        p1_quantiles: band(&|t| &t.p1),
    })
}

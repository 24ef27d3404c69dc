//! Acceptance suite: one test per criterion, each printing a measured
//! summary line. Run with `cargo test --test acceptance -- --nocapture`
//! to see every line; failures print the measured values regardless.

use spikeflow::ide::{solve_ide, ContourGrid};
use spikeflow::matrix::{
    concentration_sweep, quantile_sorted, sample_wigner, Ensemble, PairKind,
};
use spikeflow::rf::{
    build_instance, empirical_risk, rf_expectation_identity, rf_flow_mc, rf_risk_curve,
    ridge_estimator, Activation, RfConfig, WeightKind,
};
use spikeflow::simulate::{gd_step, init_vectors, simulate_run, SimConfig};
use spikeflow::theory::{
    asymptote, bar_q, bar_q_lambda1, cost_and_p1, k_lambda, noiseless_q, ScenarioParams,
};

fn grid_to(tau_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| tau_max * i as f64 / (points - 1) as f64)
        .collect()
}

#[test]
fn acceptance_01_cross_oracle_equivalence() {
    let contour = ContourGrid::new(2.5, 0.4, 256).unwrap();
    let taus = grid_to(5.0, 51);
    let mut worst = 0.0_f64;
    for &lambda in &[0.5, 1.0, 2.0, 10.0] {
        for &alpha in &[0.1, 0.5] {
            let params = ScenarioParams::new(lambda, alpha, taus.clone()).unwrap();
            let states = solve_ide(&params, &contour, 5.0, 1e-3).unwrap();
            assert_eq!(states.len(), taus.len());
            for st in &states {
                let dev = (st.q - bar_q(&params, st.tau)).abs();
                worst = worst.max(dev);
            }
        }
    }
    println!("ACCEPTANCE 01 cross-oracle equivalence: max |q_theory - q_ide| = {worst:.3e}");
    assert!(worst <= 1e-3, "max deviation {worst}");
}

#[test]
fn acceptance_02_phase_transition_limits() {
    let sup = ScenarioParams::new(10.0, 0.1, vec![0.0, 10.0]).unwrap();
    let q_sup = bar_q(&sup, 10.0);
    let gap = (q_sup - 0.9_f64.sqrt()).abs();
    let sub = ScenarioParams::new(0.5, 0.5, vec![0.0, 60.0]).unwrap();
    let q_sub = bar_q(&sub, 60.0);
    println!(
        "ACCEPTANCE 02 phase transition: |q(10,0.1,10) - sqrt(0.9)| = {gap:.3e}, q(0.5,0.5,60) = {q_sub:.4}"
    );
    assert!(gap <= 1e-3, "super-critical limit missed by {gap}");
    // Sub-critical decay bound as stated. The closed-form curve follows the
    // tau^(-3/4) law, which sits near 0.088 at tau = 60; reaching 0.02
    // requires tau beyond ~430. Kept as stated deliberately.
    assert!(
        q_sub <= 0.02,
        "sub-critical overlap at tau = 60 is {q_sub}; the tau^(-3/4) law gives ~0.088 here \
         and first dips under 0.02 near tau ~ 430"
    );
}

#[test]
fn acceptance_03_critical_power_law() {
    let q = bar_q_lambda1(0.5, 50.0);
    let normalized = q * (std::f64::consts::PI * 50.0 / 2.0).powf(0.25);
    println!("ACCEPTANCE 03 critical law: q * (pi tau / 2)^(1/4) = {normalized:.4}");
    assert!(
        (0.95..=1.05).contains(&normalized),
        "normalized critical overlap {normalized}"
    );
}

#[test]
fn acceptance_04_asymptotic_diagnostics() {
    let sup = ScenarioParams::new(2.0, 0.1, vec![0.0, 30.0]).unwrap();
    let report = asymptote(&sup, 30.0);
    let d = report.diagnostics.expect("super-critical diagnostics");
    let phi_ratio = d.phi / d.a_ref;
    let sub = ScenarioParams::new(0.5, 0.1, vec![0.0, 60.0]).unwrap();
    let sub_ratio = bar_q(&sub, 60.0) / asymptote(&sub, 60.0).predicted;
    println!(
        "ACCEPTANCE 04 asymptotics: phi/A (lambda=2, tau=30) = {phi_ratio:.4}, \
         sub-critical ratio (lambda=0.5, tau=60) = {sub_ratio:.4}"
    );
    // Both ratios do converge to 1, but only around tau ~ 200 (lambda = 2)
    // and tau ~ 300 (lambda = 0.5); at the stated times they sit near 0.67
    // and 0.88. Asserted as stated deliberately.
    assert!(
        (0.9..=1.1).contains(&phi_ratio),
        "phi/A at tau = 30 is {phi_ratio}; it enters [0.9, 1.1] only near tau ~ 200"
    );
    assert!(
        (0.9..=1.1).contains(&sub_ratio),
        "sub-critical ratio at tau = 60 is {sub_ratio}; it enters [0.9, 1.1] near tau ~ 120"
    );
}

#[test]
fn acceptance_05_noiseless_consistency() {
    let mut worst = 0.0_f64;
    for &alpha in &[0.2, 0.8] {
        let params = ScenarioParams::new(1e8, alpha, vec![0.0, 3.0]).unwrap();
        for &tau in &[0.5, 1.0, 3.0] {
            let dev = (bar_q(&params, tau) - noiseless_q(alpha, tau)).abs();
            worst = worst.max(dev);
        }
    }
    println!("ACCEPTANCE 05 noiseless consistency: max deviation = {worst:.3e}");
    assert!(worst <= 1e-3);
}

#[test]
fn acceptance_06_simulation_vs_theory() {
    let config = SimConfig {
        n: 1000,
        lambda: 2.0,
        alpha: 0.1,
        dt: 0.1,
        steps: 100,
        runs: 100,
        ensemble: Ensemble::GaussianGoe,
        base_seed: 20240,
    };
    let traces: Vec<_> = (0..config.runs as u64)
        .map(|run| simulate_run(&config, run).unwrap())
        .collect();
    for (i, trace) in traces.iter().enumerate() {
        assert!(
            trace.norm_drift <= 1e-9,
            "run {i}: norm drift {}",
            trace.norm_drift
        );
    }
    let taus = traces[0].tau.clone();
    let params = ScenarioParams::new(config.lambda, config.alpha, taus.clone()).unwrap();
    let mut worst = 0.0_f64;
    let mut column = vec![0.0; traces.len()];
    for (idx, &tau) in taus.iter().enumerate() {
        for (r, trace) in traces.iter().enumerate() {
            column[r] = trace.q[idx];
        }
        column.sort_by(f64::total_cmp);
        let median = quantile_sorted(&column, 0.5);
        worst = worst.max((median - bar_q(&params, tau)).abs());
    }
    println!("ACCEPTANCE 06 simulation vs theory: max |median q - q_bar| = {worst:.3e}");
    assert!(worst <= 0.05, "max median deviation {worst}");
}

#[test]
fn acceptance_07_stationary_arbitration() {
    // The stationary p1 is 2/sqrt(lambda), not 2/lambda: at lambda = 4 the
    // contour oracle must land within 1e-2 of 1.0 and away from 0.5.
    let contour = ContourGrid::new(2.5, 0.4, 256).unwrap();
    let params = ScenarioParams::new(4.0, 0.1, vec![0.0, 50.0]).unwrap();
    let state = solve_ide(&params, &contour, 50.0, 1e-3)
        .unwrap()
        .pop()
        .unwrap();
    println!(
        "ACCEPTANCE 07 stationary arbitration: p1(50) = {:.6} (candidates 1.0 vs 0.5)",
        state.p1
    );
    assert!((state.p1 - 1.0).abs() <= 1e-2, "p1 = {}", state.p1);
    assert!((state.p1 - 0.5).abs() > 1e-2, "p1 = {}", state.p1);
}

#[test]
fn acceptance_08_double_integral_constant() {
    let k2 = k_lambda(2.0).unwrap();
    let k10 = k_lambda(10.0).unwrap();
    println!("ACCEPTANCE 08 double-integral constant: K(2) = {k2:.9}, K(10) = {k10:.9}");
    assert!((k2 - 2.0).abs() <= 1e-6);
    assert!((k10 - 10.0 / 9.0).abs() <= 1e-6);
}

#[test]
fn acceptance_09_concentration_trend() {
    let contour = ContourGrid::new(2.5, 0.4, 64).unwrap();
    let report = concentration_sweep(
        &[100, 1600],
        20,
        &contour,
        PairKind::UvEqual,
        Ensemble::GaussianGoe,
        7,
    );
    let med_small = report.quantiles[0].1;
    let med_large = report.quantiles[1].1;
    println!(
        "ACCEPTANCE 09 concentration trend: median sup dev n=100: {med_small:.4e}, n=1600: {med_large:.4e}"
    );
    assert!(
        med_large < 0.5 * med_small,
        "median at n=1600 ({med_large}) not below half the median at n=100 ({med_small})"
    );
}

#[test]
fn acceptance_10_random_feature_identities() {
    // Exact expectation identity at d = 50.
    let cfg = RfConfig {
        d: 50,
        psi1: 1.0,
        psi2: 1.5,
        ridge: 0.1,
        activation: Activation::Tanh,
        seed: 50,
    };
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

    // Monte Carlo bracket at d = 100.
    let cfg_mc = RfConfig {
        d: 100,
        seed: 100,
        ..cfg.clone()
    };
    let (inst_mc, measures_mc) = build_instance(&cfg_mc).unwrap();
    let l_mc = cfg_mc.lambda_star();
    let t_grid: Vec<f64> = (0..9).map(|i| 0.5 * i as f64).collect();
    let mc = rf_flow_mc(&inst_mc, l_mc, &t_grid, 200, 3);
    let curve = rf_risk_curve(&inst_mc, &measures_mc, l_mc, &t_grid, WeightKind::InstanceExact)
        .unwrap();
    let mut worst_sigma = 0.0_f64;
    for i in 0..t_grid.len() {
        let sigmas = (mc.mean[i] - curve.risk[i]).abs() / mc.stderr[i].max(1e-14);
        worst_sigma = worst_sigma.max(sigmas);
    }

    // t -> infinity lands on the ridge estimator risk.
    let t_inf = 1e3 / (inst_mc.eigvals[0] + l_mc).max(1e-6);
    let tail = rf_risk_curve(
        &inst_mc,
        &measures_mc,
        l_mc,
        &[t_inf],
        WeightKind::InstanceExact,
    )
    .unwrap();
    let ridge = empirical_risk(&inst_mc, &ridge_estimator(&inst_mc, l_mc));
    let ridge_gap = (tail.risk[0] - ridge).abs() / ridge.abs();

    println!(
        "ACCEPTANCE 10 random features: identity gap = {gap:.3e}, \
         worst MC sigma = {worst_sigma:.2}, ridge relative gap = {ridge_gap:.3e}"
    );
    assert!(gap <= 1e-8, "expectation identity gap {gap}");
    assert!(worst_sigma <= 3.0, "MC curve off by {worst_sigma} sigma");
    assert!(ridge_gap <= 1e-8, "ridge limit gap {ridge_gap}");
}

#[test]
fn acceptance_11_property_suite() {
    use spikeflow::semicircle::semicircle_stieltjes;
    use spikeflow::Complex64;

    // Defining quadratic of the Stieltjes transform on random points.
    {
        use rand::Rng;
        let mut rng = spikeflow::streams::stream_rng(99, 0);
        for _ in 0..500 {
            let z = Complex64::new(rng.random_range(-8.0..8.0), rng.random_range(0.01..6.0));
            let g = semicircle_stieltjes(z).unwrap();
            assert!((g * g + z * g + 1.0).norm() <= 1e-12);
        }
    }

    // Contour-radius independence of the oracle.
    let params = ScenarioParams::new(2.0, 0.3, vec![0.0, 2.0]).unwrap();
    let q_at = |rho: f64| {
        let grid = ContourGrid::new(rho, 0.4, 256).unwrap();
        solve_ide(&params, &grid, 2.0, 1e-3).unwrap().pop().unwrap().q
    };
    let rho_gap = (q_at(2.5) - q_at(4.0)).abs();
    assert!(rho_gap <= 1e-6, "rho dependence {rho_gap}");

    // RK4 order: halving dt shrinks the error ~16x.
    let grid = ContourGrid::standard();
    let q_dt = |dt: f64| solve_ide(&params, &grid, 2.0, dt).unwrap().pop().unwrap().q;
    let (q1, q2, q3) = (q_dt(8e-3), q_dt(4e-3), q_dt(2e-3));
    let rk4_ratio = (q1 - q2).abs() / (q2 - q3).abs();
    assert!(
        (12.0..20.0).contains(&rk4_ratio),
        "RK4 convergence ratio {rk4_ratio}"
    );

    // Odd symmetry of the overlap in the initial sign, bitwise.
    for tau in [0.5, 3.0, 9.0] {
        let plus = ScenarioParams::new(1.7, 0.41, vec![0.0, 1.0]).unwrap();
        let minus = ScenarioParams::new(1.7, -0.41, vec![0.0, 1.0]).unwrap();
        assert_eq!(bar_q(&plus, tau).to_bits(), (-bar_q(&minus, tau)).to_bits());
    }

    // Mean-square-error identity along a simulated trajectory.
    {
        let n = 120;
        let noise = sample_wigner(n, Ensemble::GaussianGoe, 5).unwrap();
        let h = noise.matrix();
        let (mut theta, theta_star) = init_vectors(n, 0.25);
        let gain = n as f64 / 2.0_f64.sqrt();
        for _ in 0..50 {
            gd_step(
                &mut theta,
                |t| &theta_star * theta_star.dot(t) + (h * t) * gain,
                n,
                0.05,
            )
            .unwrap();
            let q = theta_star.dot(&theta) / n as f64;
            let mse = (&theta - &theta_star).norm_squared() / n as f64;
            assert!((mse - 2.0 * (1.0 - q)).abs() <= 1e-12);
        }
    }

    // Byte-identical CSV on rerun with the same configuration.
    let dir = tempfile::tempdir().unwrap();
    let run_theory = |out: &std::path::Path| {
        let cli = <spikeflow_cli::Cli as clap::Parser>::try_parse_from([
            "spikeflow",
            "theory",
            "--lambda",
            "2",
            "--alpha",
            "0.1",
            "--tau-max",
            "4",
            "--points",
            "41",
            "--output-dir",
            out.to_str().unwrap(),
        ])
        .unwrap();
        let job = spikeflow_cli::resolve(cli).unwrap();
        spikeflow_cli::run(&job).unwrap();
        std::fs::read(out.join("theory.csv")).unwrap()
    };
    let first = run_theory(&dir.path().join("a"));
    let second = run_theory(&dir.path().join("b"));
    assert_eq!(first, second, "CSV output must be byte-identical");

    // Cost derivative never reports degraded accuracy on the common range.
    let probe = ScenarioParams::new(2.0, 0.1, vec![0.0, 5.0]).unwrap();
    for tau in [0.5, 2.0, 5.0] {
        assert!(!cost_and_p1(&probe, tau).degraded);
    }

    println!(
        "ACCEPTANCE 11 property suite: rho gap = {rho_gap:.2e}, RK4 ratio = {rk4_ratio:.1}, \
         quadratic/odd-symmetry/MSE/CSV checks passed"
    );
}

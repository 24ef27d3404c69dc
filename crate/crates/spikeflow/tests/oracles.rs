//! Cross-route checks between the closed-form evaluators, the contour
//! oracle and the finite-size simulator at moderate times. The full
//! parameter sweeps live in the acceptance suite of the CLI crate.

use spikeflow::ide::{solve_ide, ContourGrid};
use spikeflow::simulate::{simulate_run, SimConfig};
use spikeflow::theory::{bar_q, cost_and_p1, ScenarioParams};

#[test]
fn contour_oracle_tracks_closed_form_tightly() {
    let grid = ContourGrid::standard();
    for (lambda, alpha) in [(0.5, 0.5), (1.0, 0.2), (3.0, 0.1)] {
        let params = ScenarioParams::new(lambda, alpha, vec![0.0, 1.0, 2.0]).unwrap();
        let states = solve_ide(&params, &grid, 2.0, 1e-3).unwrap();
        for st in states.iter().filter(|s| s.tau > 0.0) {
            let closed = bar_q(&params, st.tau);
            assert!(
                (st.q - closed).abs() < 1e-6,
                "lambda={lambda} alpha={alpha} tau={}: {} vs {closed}",
                st.tau,
                st.q
            );
        }
    }
}

#[test]
fn contour_oracle_p1_matches_log_derivative_route() {
    // p1 from the contour moments against p1 from differentiating ln h.
    let grid = ContourGrid::standard();
    let params = ScenarioParams::new(2.0, 0.3, vec![0.0, 1.5]).unwrap();
    let state = solve_ide(&params, &grid, 1.5, 1e-3)
        .unwrap()
        .pop()
        .unwrap();
    let closed = cost_and_p1(&params, 1.5);
    assert!(
        (state.p1 - closed.p1_bar).abs() < 1e-4,
        "{} vs {}",
        state.p1,
        closed.p1_bar
    );
    let cost_ide = 1.0 - (state.q * state.q + state.p1 / 2.0_f64.sqrt());
    assert!((cost_ide - closed.cost).abs() < 1e-4);
}

#[test]
fn simulation_fluctuates_around_theory_at_moderate_size() {
    let config = SimConfig {
        n: 600,
        lambda: 4.0,
        alpha: 0.3,
        dt: 0.05,
        steps: 80,
        runs: 1,
        ensemble: spikeflow::matrix::Ensemble::GaussianGoe,
        base_seed: 2024,
    };
    let trace = simulate_run(&config, 0).unwrap();
    let params = ScenarioParams::new(4.0, 0.3, trace.tau.clone()).unwrap();
    let mut worst = 0.0_f64;
    for (i, &tau) in trace.tau.iter().enumerate() {
        worst = worst.max((trace.q[i] - bar_q(&params, tau)).abs());
    }
    assert!(worst < 0.15, "single-run deviation {worst}");
    assert!(trace.norm_drift <= 1e-9);
}

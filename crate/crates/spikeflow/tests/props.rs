//! Property tests for the analytic building blocks.

use num_complex::Complex64;
use proptest::prelude::*;
use spikeflow::semicircle::{
    mgf_scaled, mgf_scaled_by_quadrature, semicircle_density, semicircle_stieltjes,
};
use spikeflow::special::{bessel_i0_scaled, bessel_i1_scaled};
use spikeflow::theory::{bar_q, noiseless_q, ScenarioParams};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stieltjes_quadratic_identity(re in -8.0..8.0f64, im in 1e-3..6.0f64) {
        let z = Complex64::new(re, im);
        let g = semicircle_stieltjes(z).unwrap();
        let residual = g * g + z * g + 1.0;
        prop_assert!(residual.norm() <= 1e-12);
    }

    #[test]
    fn stieltjes_herglotz(re in -8.0..8.0f64, im in 1e-6..6.0f64) {
        let g = semicircle_stieltjes(Complex64::new(re, im)).unwrap();
        prop_assert!(g.im > 0.0);
    }

    #[test]
    fn density_supported_and_bounded(s in -5.0..5.0f64) {
        let v = semicircle_density(s);
        prop_assert!(v >= 0.0);
        prop_assert!(v <= 1.0 / std::f64::consts::PI + 1e-15);
        if s.abs() > 2.0 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn scaled_values_never_exceed_one(x in 0.0..500.0f64) {
        prop_assert!(bessel_i0_scaled(x) <= 1.0 + 1e-12);
        prop_assert!(bessel_i1_scaled(x) < 1.0);
    }

    #[test]
    fn mgf_routes_agree(lambda in 0.2..30.0f64, tau in 0.0..25.0f64) {
        let bessel = mgf_scaled(lambda, tau);
        let quad = mgf_scaled_by_quadrature(lambda, tau, 512);
        prop_assert!(bessel <= 1.0 + 1e-12);
        prop_assert!((bessel - quad).abs() <= 1e-9 * quad.abs().max(1e-30));
    }

    #[test]
    fn noiseless_overlap_bounded(alpha in -1.0..1.0f64, tau in 0.0..40.0f64) {
        let q = noiseless_q(alpha, tau);
        prop_assert!(q.abs() <= 1.0 + 1e-12);
        prop_assert!(q.signum() == alpha.signum() || alpha == 0.0);
    }

    #[test]
    fn overlap_odd_in_alpha(lambda in 0.3..6.0f64, alpha in 0.01..1.0f64, tau in 0.0..8.0f64) {
        let plus = ScenarioParams::new(lambda, alpha, vec![0.0, 1.0]).unwrap();
        let minus = ScenarioParams::new(lambda, -alpha, vec![0.0, 1.0]).unwrap();
        let qp = bar_q(&plus, tau);
        let qm = bar_q(&minus, tau);
        prop_assert_eq!(qp.to_bits(), (-qm).to_bits());
        prop_assert!(qp.abs() <= 1.0);
    }
}

mod common;

use common::*;
use faddeev3d::grids::momentum_grid;
use faddeev3d::twobody::*;
use proptest::prelude::*;

#[test]
fn tau_matches_closed_form_below_threshold() {
    let mu = M_AVG / 2.0;
    let lambda = yamaguchi_lambda(BETA, mu, DEUTERON);
    let pot = SeparablePotential::yamaguchi(BETA, lambda, mu).unwrap();
    for e in [-0.5, -5.0, -40.0] {
        let tau = pot.tau(e).unwrap().scalar();
        assert!(rel(tau, yamaguchi_tau(BETA, mu, lambda, e)) < 1e-8, "E = {e}");
    }
}

#[test]
fn bound_state_is_normalised() {
    let mu = 1.0 / (1.0 / MP + 1.0 / MN);
    let pot = SeparablePotential::yamaguchi(BETA, yamaguchi_lambda(BETA, mu, DEUTERON), mu).unwrap();
    let bs = find_two_body_bound_state(&pot, (-10.0, -0.5)).unwrap();
    let grid = momentum_grid(96, 50.0).unwrap();
    let norm = grid.integrate(|p| p * p * bs.wave(p).powi(2));
    assert!((norm - 1.0).abs() < 1e-6, "norm {norm}");
    assert!(bs.wave(0.0) > 0.0);
}

#[test]
fn empty_window_reports_no_bound_state() {
    let mu = M_AVG / 2.0;
    let pot = SeparablePotential::yamaguchi(BETA, yamaguchi_lambda(BETA, mu, DEUTERON), mu).unwrap();
    assert!(find_two_body_bound_state(&pot, (-100.0, -50.0)).is_err());
    assert!(find_two_body_bound_state(&pot, (-1.0, 1.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tuned_strength_binds_where_asked(beta in 100.0f64..500.0, mu in 200.0f64..1500.0, eb in -30.0f64..-0.2) {
        let lambda = yamaguchi_strength_for_binding(beta, mu, eb).unwrap();
        prop_assert!(rel(lambda, yamaguchi_lambda(beta, mu, eb)) < 1e-12);
        let pot = SeparablePotential::yamaguchi(beta, lambda, mu).unwrap();
        let bs = find_two_body_bound_state(&pot, (3.0 * eb, 0.3 * eb)).unwrap();
        prop_assert!(rel(bs.energy, eb) < 1e-6);
    }

    #[test]
    fn j_matches_closed_form(beta in 100.0f64..500.0, mu in 200.0f64..1500.0, e in -80.0f64..-0.05) {
        let pot = SeparablePotential::yamaguchi(beta, -1.0, mu).unwrap();
        prop_assert!(rel(pot.j_matrix(e).unwrap()[(0, 0)], yamaguchi_j(beta, mu, e)) < 1e-8);
    }
}

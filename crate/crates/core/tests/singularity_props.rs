mod common;

use common::*;
use faddeev3d::kinematics::MassSet;
use faddeev3d::singularity::*;
use proptest::prelude::*;

fn spec() -> impl Strategy<Value = GreenFunctionSpec> {
    (0.2f64..5.0, 0.2f64..5.0, 0.2f64..5.0, 0.1f64..20.0, 1u8..=6).prop_map(|(a, b, c, e, v)| {
        GreenFunctionSpec::new(v, MassSet::new(a * MP, b * MP, c * MP).unwrap(), e).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn limits_match_bisection(s in spec()) {
        let (qv, qw) = q_limits(&s).unwrap();
        let g = s.green_masses();
        let (ov, ow) = q_limits_by_bisection(g.mu_q, g.mu_q2, g.m_cross, s.energy);
        prop_assert!(rel(qv, ov) < 1e-6 && rel(qw, ow) < 1e-6);
        prop_assert!(qv < qw);
    }

    #[test]
    fn band_is_where_y0_is_a_cosine(s in spec(), u in 0.01f64..1.0, v in 0.01f64..1.5) {
        let (_, qw) = q_limits(&s).unwrap();
        let (q, q2) = (u * qw, v * qw);
        let y = y0(&s, q, q2).unwrap();
        prop_assume!((y.abs() - 1.0).abs() > 1e-9);
        let member = band_at(&s, q).unwrap().is_some_and(|(lo, hi)| lo <= q2 && q2 <= hi);
        prop_assert_eq!(member, y.abs() <= 1.0);
    }

    #[test]
    fn permutation_reproduces_every_variant(s in spec(), u in 0.01f64..0.99) {
        prop_assume!(s.variant != 1);
        let base = GreenFunctionSpec::new(1, s.masses, s.energy).unwrap();
        let p = permuted_spec(&base, s.variant).unwrap();
        let (_, qw) = q_limits(&s).unwrap();
        let a = closed_form_curves(&s, u * qw).unwrap();
        let b = closed_form_curves(&p, u * qw).unwrap();
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!(rel(*x, *y) < 1e-12),
                (None, None) => {}
                _ => prop_assert!(false, "curve existence differs"),
            }
        }
    }
}

#[test]
fn region_csv_round_trips() {
    let s = GreenFunctionSpec::new(2, pnp(), 1.0).unwrap();
    let region = boundary_curves(&s, 32).unwrap();
    let back = parse_region(&region_to_csv(&region)).unwrap();
    assert_eq!(region_to_csv(&back), region_to_csv(&region));
}

#[test]
fn negative_energy_has_no_region() {
    let s = GreenFunctionSpec::new(1, pnp(), -1.0).unwrap();
    assert!(q_limits(&s).is_err());
    assert!(boundary_curves(&s, 32).is_err());
}

use proptest::prelude::*;
use std::time::Instant;

use vortex_steer::bounds::{
    bound_curve, bound_oracle, deterministic_bound, loss_tolerant_bound, loss_tolerant_bound_with, strategy_payoff,
    AnnounceConstraint,
};
use vortex_steer::qmath::BlochVector;
use vortex_steer::steering::{platonic_set, MeasurementSet};

fn unit_vector() -> impl Strategy<Value = BlochVector> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        BlochVector::new(r * phi.cos(), r * phi.sin(), z)
    })
}

fn measurement_set(n: usize) -> impl Strategy<Value = MeasurementSet> {
    prop::collection::vec(unit_vector(), n).prop_filter_map("parallel directions", |d| MeasurementSet::new(d).ok())
}

#[test]
fn hundred_point_curves_are_fast() {
    for n in [2, 3, 4, 6] {
        let set = platonic_set(n).unwrap();
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        let start = Instant::now();
        let curve = bound_curve(&set, &grid).unwrap();
        assert!(start.elapsed().as_secs_f64() < 10.0);
        assert_eq!(curve.c_values.len(), 100);
        assert!(curve.witnesses.iter().all(|w| w.components.len() <= 2));
    }
}

#[test]
fn unsupported_setting_counts() {
    assert!(platonic_set(5).is_err());
    assert!(platonic_set(1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_is_non_increasing_and_bracketed(set in measurement_set(3), a in 0.05f64..1.0, b in 0.05f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let c_lo = loss_tolerant_bound(&set, lo).unwrap().0;
        let c_hi = loss_tolerant_bound(&set, hi).unwrap().0;
        prop_assert!(c_hi <= c_lo + 1e-9);
        prop_assert!(c_hi >= deterministic_bound(&set) - 1e-9);
        prop_assert!(c_lo <= 1.0);
    }

    #[test]
    fn lp_dominates_the_oracle(set in measurement_set(3), xi in 0.3f64..1.0) {
        let lp = loss_tolerant_bound(&set, xi).unwrap().0;
        let brute = bound_oracle(&set, xi, 0.03);
        prop_assert!(lp >= brute - 1e-12);
        prop_assert!(lp - brute < 2e-3);
    }

    #[test]
    fn witness_attains_the_bound(set in measurement_set(4), xi in 0.2f64..1.0) {
        let (c, w) = loss_tolerant_bound(&set, xi).unwrap();
        let weight: f64 = w.components.iter().map(|(p, _)| p).sum();
        prop_assert!((weight - 1.0).abs() < 1e-9);
        prop_assert!(w.announce_fraction(4) >= xi - 1e-9);
        let payoff: f64 = w.components.iter().map(|(p, s)| p * strategy_payoff(s, &set).0).sum();
        let answered: f64 = w.components.iter().map(|(p, s)| p * s.answered() as f64).sum();
        prop_assert!((payoff / answered - c).abs() < 1e-9);
    }

    #[test]
    fn per_setting_constraint_is_never_looser(set in measurement_set(3), xi in 0.1f64..1.0) {
        let avg = loss_tolerant_bound(&set, xi).unwrap().0;
        let strict = loss_tolerant_bound_with(&set, xi, AnnounceConstraint::PerSetting).unwrap().0;
        prop_assert!(strict <= avg + 1e-9);
    }
}

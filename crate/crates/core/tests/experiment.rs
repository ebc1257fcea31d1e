use std::f64::consts::PI;

use vortex_steer::bounds::loss_tolerant_bound;
use vortex_steer::encoding::Encoding;
use vortex_steer::experiment::{
    dynamic_rotation_run, prepare_state, run_experiment, sweep_theta, ChannelModel, NoiseModel, ThetaPolicy,
};
use vortex_steer::qmath::DensityMatrix;
use vortex_steer::steering::platonic_set;

const V: f64 = (4.0 * 0.977 - 1.0) / 3.0;

fn within(actual: f64, expected: f64, sigmas: f64, std_err: f64) -> bool {
    (actual - expected).abs() <= (sigmas * std_err).max(1e-12)
}

#[test]
fn ideal_vortex_singlet_is_perfectly_correlated() {
    let set = platonic_set(3).unwrap();
    let rho = prepare_state(&NoiseModel::default(), Encoding::Vortex).unwrap();
    let theta = 37f64.to_radians();
    let run = run_experiment(&rho, &set, Encoding::Vortex, ChannelModel::default(), ThetaPolicy::Fixed { theta }, 1_000_000, 1)
        .unwrap();
    assert!(within(run.estimate.s_value, 1.0, 3.0, run.estimate.std_err));
    assert!(run.violated);
}

#[test]
fn lossy_werner_vortex_run_violates() {
    let set = platonic_set(3).unwrap();
    let rho = prepare_state(&NoiseModel::new(V, 0.0).unwrap(), Encoding::Vortex).unwrap();
    let channel = ChannelModel::new(0.45, 1.0).unwrap();
    for (i, deg) in [0.0, 22.0, 61.0, 90.0].into_iter().enumerate() {
        let policy = ThetaPolicy::Fixed { theta: f64::to_radians(deg) };
        let run = run_experiment(&rho, &set, Encoding::Vortex, channel, policy, 1_000_000, 100 + i as u64).unwrap();
        assert!(within(run.estimate.s_value, V, 3.0, run.estimate.std_err), "θ={deg}: {}", run.estimate.s_value);
        let expected_bound = loss_tolerant_bound(&set, run.estimate.announce_fraction).unwrap().0;
        assert_eq!(run.bound_at_observed_xi, expected_bound);
        assert!((run.bound_at_observed_xi - loss_tolerant_bound(&set, 0.45).unwrap().0).abs() < 5e-3);
        assert!(run.violated);
    }
}

#[test]
fn crossed_polarization_run_anticorrelates() {
    let set = platonic_set(3).unwrap();
    let rho = prepare_state(&NoiseModel::new(V, 0.0).unwrap(), Encoding::Polarization).unwrap();
    let channel = ChannelModel::new(0.45, 1.0).unwrap();
    let policy = ThetaPolicy::Fixed { theta: PI / 2.0 };
    let run = run_experiment(&rho, &set, Encoding::Polarization, channel, policy, 1_000_000, 7).unwrap();
    assert!(within(run.estimate.s_value, -V / 3.0, 3.0, run.estimate.std_err));
    assert!(!run.violated);
}

#[test]
fn announce_fraction_tracks_efficiency() {
    let set = platonic_set(4).unwrap();
    let rho = prepare_state(&NoiseModel::new(0.8, 0.0).unwrap(), Encoding::Vortex).unwrap();
    let trials = 400_000u64;
    for eta in [0.3, 0.45, 0.9] {
        let channel = ChannelModel::new(eta, 1.0).unwrap();
        let run = run_experiment(&rho, &set, Encoding::Vortex, channel, ThetaPolicy::dynamic(), trials, 3).unwrap();
        let sigma = (eta * (1.0 - eta) / trials as f64).sqrt();
        assert!((run.estimate.announce_fraction - eta).abs() < 3.0 * sigma);
    }
}

#[test]
fn loss_does_not_bias_announced_correlations() {
    let set = platonic_set(3).unwrap();
    let rho = prepare_state(&NoiseModel::new(0.7, 0.1).unwrap(), Encoding::Polarization).unwrap();
    let policy = ThetaPolicy::Fixed { theta: 0.3 };
    let lossless = run_experiment(&rho, &set, Encoding::Polarization, ChannelModel::default(), policy, 500_000, 1).unwrap();
    let lossy =
        run_experiment(&rho, &set, Encoding::Polarization, ChannelModel::new(0.4, 1.0).unwrap(), policy, 500_000, 2)
            .unwrap();
    let combined = lossless.estimate.std_err.hypot(lossy.estimate.std_err);
    assert!((lossless.estimate.s_value - lossy.estimate.s_value).abs() < 3.0 * combined);
}

#[test]
fn sweeps_follow_the_closed_forms() {
    let set = platonic_set(3).unwrap();
    let thetas: Vec<f64> = (0..=6).map(|i| f64::to_radians(15.0 * i as f64)).collect();
    let channel = ChannelModel::default();

    let pol = prepare_state(&NoiseModel::new(V, 0.0).unwrap(), Encoding::Polarization).unwrap();
    let runs = sweep_theta(&pol, &set, Encoding::Polarization, channel, &thetas, 300_000, 9).unwrap();
    for (run, theta) in runs.iter().zip(&thetas) {
        let expected = V * (1.0 + 2.0 * (2.0 * theta).cos()) / 3.0;
        assert!(within(run.estimate.s_value, expected, 3.0, run.estimate.std_err));
    }

    let vv = prepare_state(&NoiseModel::new(V, 0.0).unwrap(), Encoding::Vortex).unwrap();
    let runs = sweep_theta(&vv, &set, Encoding::Vortex, channel, &thetas, 300_000, 9).unwrap();
    let seeds: Vec<u64> = runs.iter().map(|r| r.seed).collect();
    assert!(seeds.windows(2).all(|w| w[0] != w[1]));
    for a in &runs {
        for b in &runs {
            let spread = (a.estimate.s_value - b.estimate.s_value).abs();
            assert!(spread <= 4.0 * a.estimate.std_err.hypot(b.estimate.std_err));
        }
    }
}

#[test]
fn dynamic_runs_separate_the_encodings() {
    let set = platonic_set(3).unwrap();
    let channel = ChannelModel::new(0.45, 1.0).unwrap();

    let vv = prepare_state(&NoiseModel::new(V, 0.0).unwrap(), Encoding::Vortex).unwrap();
    let run = dynamic_rotation_run(&vv, &set, Encoding::Vortex, channel, 1_000_000, 21).unwrap();
    assert!(within(run.estimate.s_value, V, 3.0, run.estimate.std_err));
    assert!(run.violated);

    let pol = prepare_state(&NoiseModel::new(V, 0.0).unwrap(), Encoding::Polarization).unwrap();
    let run = dynamic_rotation_run(&pol, &set, Encoding::Polarization, channel, 1_000_000, 21).unwrap();
    assert!(within(run.estimate.s_value, V / 3.0, 3.0, run.estimate.std_err));
    assert!(!run.violated);
}

#[test]
fn per_setting_orientation_keeps_vortex_violation() {
    let set = platonic_set(3).unwrap();
    let channel = ChannelModel::new(0.45, 1.0).unwrap();
    let vv = prepare_state(&NoiseModel::new(V, 0.0).unwrap(), Encoding::Vortex).unwrap();
    let policy = ThetaPolicy::PerSetting { min: 0.0, max: PI / 2.0 };
    let run = run_experiment(&vv, &set, Encoding::Vortex, channel, policy, 500_000, 4).unwrap();
    assert!(within(run.estimate.s_value, V, 3.0, run.estimate.std_err));
    assert!(run.violated);
}

#[test]
fn separable_state_never_violates() {
    let set = platonic_set(3).unwrap();
    let channel = ChannelModel::new(0.45, 1.0).unwrap();
    let rho = DensityMatrix::maximally_mixed(4);
    for seed in 0..20 {
        let run = run_experiment(&rho, &set, Encoding::Polarization, channel, ThetaPolicy::dynamic(), 20_000, seed).unwrap();
        assert!(!run.violated);
    }
}

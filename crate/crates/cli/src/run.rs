//! Command execution. Each command renders its whole output in memory so the
//! file can be written in one atomic step.

use serde::Serialize;
use serde_json::json;
use vortex_steer::bounds::{bound_curve_with, AnnounceConstraint, Witness};
use vortex_steer::encoding::{singlet_polarization, Receiver};
use vortex_steer::experiment::{ChannelModel, Experiment, NoiseModel, SteeringRunResult, ThetaPolicy};
use vortex_steer::steering::platonic_set;
use vortex_steer::tomography::{minimal_settings, reconstruct, simulate_counts, standard_settings};

use crate::config::{CommandKind, DynamicMode, Format, RunConfig, TomographySet};
use crate::error::CliError;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn num(x: f64) -> String {
    sig12(x).to_string()
}

pub fn execute(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    config.validate()?;
    match config.command {
        CommandKind::Bound => bound(config),
        CommandKind::Tomo => tomo(config),
        CommandKind::Steer | CommandKind::Sweep | CommandKind::Dynamic => steering(config),
    }
}

fn constraint(config: &RunConfig) -> AnnounceConstraint {
    if config.strict {
        AnnounceConstraint::PerSetting
    } else {
        AnnounceConstraint::Average
    }
}

fn witness_pattern(w: &Witness) -> String {
    w.components.iter().map(|(p, s)| format!("{}*{}", num(*p), s.pattern())).collect::<Vec<_>>().join("|")
}

fn bound(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let set = platonic_set(config.n)?;
    let curve = bound_curve_with(&set, &config.xi, constraint(config))?;
    let rows = curve.xi_grid.iter().zip(&curve.c_values).zip(&curve.witnesses);
    match config.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["xi", "c_n", "witness_pattern"])?;
            for ((xi, c), witness) in rows {
                w.write_record([num(*xi), num(*c), witness_pattern(witness)])?;
            }
            finish_csv(w)
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .map(|((xi, c), witness)| {
                    let witness: Vec<_> = witness
                        .components
                        .iter()
                        .map(|(p, s)| json!({"weight": sig12(*p), "pattern": s.pattern()}))
                        .collect();
                    json!({"xi": sig12(*xi), "c_n": sig12(*c), "witness": witness})
                })
                .collect();
            to_json(&json!({"n": curve.n, "constraint": constraint(config), "rows": rows}))
        }
    }
}

fn experiment(config: &RunConfig) -> Result<(Experiment, vortex_steer::qmath::DensityMatrix), CliError> {
    let set = platonic_set(config.n)?;
    let channel = ChannelModel::new(config.efficiency, config.alice_efficiency)?;
    let exp = Experiment::new(set, config.encoding, channel).with_announce_constraint(constraint(config));
    let noise = NoiseModel::new(config.werner_v, config.dephasing)?;
    let state = exp.receiver.distribute(&noise.polarization_state()?)?;
    Ok((exp, state))
}

fn steering(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let (exp, state) = experiment(config)?;
    let seed = config.seed.expect("validated");
    let runs: Vec<(String, SteeringRunResult)> = match config.command {
        CommandKind::Steer => {
            let policy = ThetaPolicy::Fixed { theta: config.theta_deg.to_radians() };
            vec![(num(config.theta_deg), exp.run(&state, policy, config.trials, seed)?)]
        }
        CommandKind::Sweep => {
            let thetas: Vec<f64> = config.thetas_deg.iter().map(|t| t.to_radians()).collect();
            let runs = exp.sweep(&state, &thetas, config.trials, seed)?;
            config.thetas_deg.iter().map(|t| num(*t)).zip(runs).collect()
        }
        _ => {
            let [lo, hi] = config.theta_range_deg;
            let (min, max) = (lo.to_radians(), hi.to_radians());
            let policy = match config.dynamic_mode {
                DynamicMode::PerTrial => ThetaPolicy::PerTrial { min, max },
                DynamicMode::PerSetting => ThetaPolicy::PerSetting { min, max },
            };
            let label = format!("dynamic:{}-{}", num(lo), num(hi));
            vec![(label, exp.run(&state, policy, config.trials, seed)?)]
        }
    };
    match config.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["theta_deg", "encoding", "n", "s_value", "std_err", "announce_fraction", "bound", "violated"])?;
            for (theta, r) in &runs {
                w.write_record([
                    theta.clone(),
                    r.encoding.to_string(),
                    r.n.to_string(),
                    num(r.estimate.s_value),
                    num(r.estimate.std_err),
                    num(r.estimate.announce_fraction),
                    num(r.bound_at_observed_xi),
                    r.violated.to_string(),
                ])?;
            }
            finish_csv(w)
        }
        Format::Json => {
            let rows: Vec<_> = runs
                .iter()
                .map(|(theta, r)| {
                    json!({
                        "theta_deg": theta,
                        "encoding": r.encoding,
                        "n": r.n,
                        "s_value": sig12(r.estimate.s_value),
                        "std_err": sig12(r.estimate.std_err),
                        "announce_fraction": sig12(r.estimate.announce_fraction),
                        "bound": sig12(r.bound_at_observed_xi),
                        "violated": r.violated,
                        "per_setting_correlations":
                            r.estimate.per_setting_correlations.iter().map(|c| sig12(*c)).collect::<Vec<_>>(),
                        "trials": r.trials,
                        "pairs_emitted": r.pairs_emitted,
                        "seed": r.seed,
                    })
                })
                .collect();
            to_json(&json!({ "rows": rows }))
        }
    }
}

fn tomo(config: &RunConfig) -> Result<Vec<u8>, CliError> {
    let receiver = Receiver::new(config.encoding);
    let noise = NoiseModel::new(config.werner_v, config.dephasing)?;
    let shared = receiver.distribute(&noise.polarization_state()?)?;
    let seen = receiver.detected_state(&shared, config.theta_deg.to_radians())?;
    let spec = match config.tomography_set {
        TomographySet::Standard => standard_settings(),
        TomographySet::Minimal => minimal_settings(),
    }
    .with_counts(config.counts_per_setting)?;
    let counts = simulate_counts(&seen, &spec, config.seed.expect("validated"))?;
    let report = reconstruct(&counts, &spec, &singlet_polarization())?;
    let m = report.rho_hat.matrix();
    let rho: Vec<Vec<_>> = (0..4)
        .map(|i| (0..4).map(|j| json!({"re": sig12(m[(i, j)].re), "im": sig12(m[(i, j)].im)})).collect())
        .collect();
    to_json(&json!({
        "encoding": config.encoding,
        "theta_deg": sig12(config.theta_deg),
        "fidelity": sig12(report.fidelity_to_target),
        "purity": sig12(report.purity),
        "log_likelihood": sig12(report.log_likelihood),
        "iterations": report.iterations,
        "converged": report.converged,
        "rho_hat": rho,
    }))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0 / 3.0f64.sqrt()), "0.57735026919");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(-0.25), "-0.25");
        assert_eq!(num(2e6), "2000000");
        assert_eq!(num(1.0), "1");
    }

    #[test]
    fn bound_csv() {
        let config = RunConfig { xi: vec![0.5, 1.0], ..RunConfig::default() };
        let text = String::from_utf8(execute(&config).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "xi,c_n,witness_pattern");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1,0.57735026919,"));
    }

    #[test]
    fn tomo_json_shape() {
        let config = RunConfig {
            command: CommandKind::Tomo,
            seed: Some(1),
            format: Format::Json,
            counts_per_setting: 1e4,
            ..RunConfig::default()
        };
        let v: serde_json::Value = serde_json::from_slice(&execute(&config).unwrap()).unwrap();
        assert_eq!(v["rho_hat"].as_array().unwrap().len(), 4);
        assert_eq!(v["rho_hat"][0].as_array().unwrap().len(), 4);
        assert!(v["rho_hat"][1][2]["re"].is_number());
        assert!(v["fidelity"].as_f64().unwrap() > 0.95);
    }
}

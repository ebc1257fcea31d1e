//! Fully resolved run configuration, shared by flags and config files.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use vortex_steer::encoding::Encoding;
use vortex_steer::experiment::DEFAULT_TRIALS;
use vortex_steer::steering::platonic_set;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Bound,
    Steer,
    Sweep,
    Dynamic,
    Tomo,
}

impl CommandKind {
    fn samples(self) -> bool {
        self != CommandKind::Bound
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicMode {
    #[default]
    PerTrial,
    PerSetting,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TomographySet {
    /// 36 pairs of Pauli eigenstates.
    #[default]
    Standard,
    /// 16 pairs of H, V, D, R.
    Minimal,
}

/// Every parameter a command reads. Fields a command does not use keep
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: usize,
    pub encoding: Encoding,
    pub werner_v: f64,
    pub dephasing: f64,
    /// Bob's heralding efficiency.
    pub efficiency: f64,
    pub alice_efficiency: f64,
    pub theta_deg: f64,
    pub thetas_deg: Vec<f64>,
    pub theta_range_deg: [f64; 2],
    pub dynamic_mode: DynamicMode,
    pub xi: Vec<f64>,
    /// Apply the announce floor to every setting rather than on average.
    pub strict: bool,
    pub trials: u64,
    pub counts_per_setting: f64,
    pub tomography_set: TomographySet,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: CommandKind::Bound,
            n: 3,
            encoding: Encoding::Vortex,
            werner_v: 1.0,
            dephasing: 0.0,
            efficiency: 1.0,
            alice_efficiency: 1.0,
            theta_deg: 0.0,
            thetas_deg: grid("0:90:15").expect("valid default"),
            theta_range_deg: [0.0, 90.0],
            dynamic_mode: DynamicMode::PerTrial,
            xi: grid("0.01:1:0.01").expect("valid default"),
            strict: false,
            trials: DEFAULT_TRIALS,
            counts_per_setting: 100_000.0,
            tomography_set: TomographySet::Standard,
            seed: None,
            output: None,
            format: Format::Csv,
        }
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    /// Empties grids the command ignores so sidecars stay readable.
    pub fn clear_unused(&mut self) {
        if self.command != CommandKind::Bound {
            self.xi.clear();
        }
        if self.command != CommandKind::Sweep {
            self.thetas_deg.clear();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.command != CommandKind::Tomo {
            platonic_set(self.n)?;
        }
        if !(0.0..=1.0).contains(&self.werner_v) {
            return Err(invalid(format!("visibility {} outside [0, 1]", self.werner_v)));
        }
        if !(0.0..=1.0).contains(&self.dephasing) {
            return Err(invalid(format!("dephasing {} outside [0, 1]", self.dephasing)));
        }
        for (name, e) in [("efficiency", self.efficiency), ("alice efficiency", self.alice_efficiency)] {
            if !(e > 0.0 && e <= 1.0) {
                return Err(invalid(format!("{name} {e} outside (0, 1]")));
            }
        }
        if self.command.samples() && self.seed.is_none() {
            return Err(invalid("--seed is required for sampling commands"));
        }
        match self.command {
            CommandKind::Bound => {
                if self.xi.is_empty() {
                    return Err(invalid("empty xi grid"));
                }
                if let Some(x) = self.xi.iter().find(|x| !(**x > 0.0 && **x <= 1.0)) {
                    return Err(invalid(format!("xi {x} outside (0, 1]")));
                }
                if self.xi.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("xi grid must be strictly increasing"));
                }
            }
            CommandKind::Steer | CommandKind::Sweep | CommandKind::Dynamic => {
                if self.trials == 0 || self.trials < self.n as u64 {
                    return Err(invalid(format!("trials must be at least n = {}, got {}", self.n, self.trials)));
                }
            }
            CommandKind::Tomo => {
                if !(self.counts_per_setting > 0.0 && self.counts_per_setting.is_finite()) {
                    return Err(invalid("counts per setting must be positive"));
                }
                if self.format != Format::Json {
                    return Err(invalid("tomo writes JSON only; pass --format json"));
                }
            }
        }
        match self.command {
            CommandKind::Steer | CommandKind::Tomo if !self.theta_deg.is_finite() => {
                Err(invalid("theta must be finite"))
            }
            CommandKind::Sweep => {
                if let Some(t) = self.thetas_deg.iter().find(|t| !(0.0..360.0).contains(*t)) {
                    return Err(invalid(format!("theta {t} outside [0, 360)")));
                }
                Ok(())
            }
            CommandKind::Dynamic => {
                let [lo, hi] = self.theta_range_deg;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(invalid(format!("theta range [{lo}, {hi}] is empty")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Parses `start:stop:step` (inclusive), a comma list, or a single value.
pub fn grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(format!("bad number '{s}' in '{spec}'")));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && start.is_finite() && stop.is_finite() && stop >= start) {
                return Err(invalid(format!("bad range '{spec}'")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(invalid(format!("range '{spec}' has too many points")));
            }
            Ok((0..count).map(|i| round_decimal(start + i as f64 * step)).collect())
        }
        [_] => spec.split(',').map(num).collect(),
        _ => Err(invalid(format!("expected start:stop:step, got '{spec}'"))),
    }
}

/// Strips accumulated float noise from grid points.
fn round_decimal(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = grid("0.34:1.0:0.01").unwrap();
        assert_eq!(g.len(), 67);
        assert_eq!(g[0], 0.34);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert_eq!(grid("0:90:15").unwrap(), vec![0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0]);
        assert_eq!(grid("0.4, 0.5").unwrap(), vec![0.4, 0.5]);
        assert_eq!(grid("1").unwrap(), vec![1.0]);
        assert!(grid("1:0:0.1").is_err());
        assert!(grid("0:1:0").is_err());
        assert!(grid("a").is_err());
        assert!(grid("0:1").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig { command: CommandKind::Steer, seed: Some(1), ..RunConfig::default() };
        assert!(c.validate().is_ok());
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 10;
        c.seed = None;
        assert!(c.validate().is_err());
        let c = RunConfig { n: 5, ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { command: CommandKind::Tomo, seed: Some(1), ..RunConfig::default() };
        assert!(c.validate().is_err());
        let c = RunConfig { command: CommandKind::Sweep, seed: Some(1), thetas_deg: vec![360.0], ..RunConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = RunConfig { command: CommandKind::Sweep, werner_v: (4.0 * 0.977 - 1.0) / 3.0, seed: Some(9), ..RunConfig::default() };
        let text = serde_json::to_string_pretty(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(c, back);
        let partial: RunConfig = serde_json::from_str(r#"{"command": "bound", "n": 4}"#).unwrap();
        assert_eq!(partial.n, 4);
        assert!(serde_json::from_str::<RunConfig>(r#"{"command": "bound", "bogus": 1}"#).is_err());
    }
}

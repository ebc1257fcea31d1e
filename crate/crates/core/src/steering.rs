//! Measurement settings and the steering parameter
//! `S_n = (1/n) Σ_k <σ^A_k B_k>`.
//!
//! Bob's reported value `B_k` is the negated analyzer outcome, so the ideal
//! singlet (perfectly anticorrelated along every axis) gives `S_n = +1`.
//! Correlations are conditioned on Bob announcing an outcome, per setting,
//! and the settings are weighted uniformly.

use serde::{Deserialize, Serialize};

use crate::encoding::{polarization_projector, Encoding, Receiver};
use crate::error::{Error, Result};
use crate::qmath::{BlochVector, DensityMatrix};

/// Directions closer than this (or to each other's antipode) are rejected.
const DISTINCT_TOL: f64 = 1e-9;

/// `n` Bloch directions measured by Alice (and by an honest Bob).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSet {
    directions: Vec<BlochVector>,
}

impl MeasurementSet {
    pub fn new(directions: Vec<BlochVector>) -> Result<Self> {
        if directions.len() < 2 {
            return Err(Error::InvalidMeasurementSet(format!("need at least 2 settings, got {}", directions.len())));
        }
        for (i, u) in directions.iter().enumerate() {
            if !u.is_unit() {
                return Err(Error::InvalidMeasurementSet(format!("direction {i} has length {}", u.norm())));
            }
            for (j, w) in directions.iter().enumerate().skip(i + 1) {
                if 1.0 - u.dot(w).abs() < DISTINCT_TOL {
                    return Err(Error::InvalidMeasurementSet(format!("directions {i} and {j} are parallel")));
                }
            }
        }
        Ok(Self { directions })
    }

    pub fn n(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[BlochVector] {
        &self.directions
    }
}

/// Canonical regular-polyhedron settings for `n ∈ {2, 3, 4, 6}`.
///
/// * 2: `{ẑ, x̂}`
/// * 3: `{x̂, ŷ, ẑ}`
/// * 4: tetrahedron vertices (cube body diagonals), `ẑ` first
/// * 6: one vertex from each antipodal pair of an icosahedron, `ẑ` first
pub fn platonic_set(n: usize) -> Result<MeasurementSet> {
    let dirs = match n {
        2 => vec![BlochVector::Z, BlochVector::X],
        3 => vec![BlochVector::X, BlochVector::Y, BlochVector::Z],
        4 => {
            let s = (2.0f64 / 3.0).sqrt();
            let r = 2.0 * 2.0f64.sqrt() / 3.0;
            vec![
                BlochVector::Z,
                BlochVector::new(r, 0.0, -1.0 / 3.0),
                BlochVector::new(-r / 2.0, s, -1.0 / 3.0),
                BlochVector::new(-r / 2.0, -s, -1.0 / 3.0),
            ]
        }
        6 => {
            let z = 1.0 / 5.0f64.sqrt();
            let rho = 2.0 * z;
            let mut d = vec![BlochVector::Z];
            for k in 0..5 {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
                d.push(BlochVector::new(rho * phi.cos(), rho * phi.sin(), z));
            }
            d
        }
        other => return Err(Error::UnsupportedSettingCount(other)),
    };
    MeasurementSet::new(dirs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringEstimate {
    pub s_value: f64,
    /// One standard deviation, statistical only.
    pub std_err: f64,
    /// Fraction of rounds in which Bob announced an outcome.
    pub announce_fraction: f64,
    pub per_setting_correlations: Vec<f64>,
}

impl SteeringEstimate {
    fn from_parts(correlations: Vec<f64>, variances: &[f64], announce_fraction: f64) -> Self {
        let n = correlations.len() as f64;
        let s_value = correlations.iter().sum::<f64>() / n;
        let std_err = variances.iter().sum::<f64>().sqrt() / n;
        Self { s_value, std_err, announce_fraction, per_setting_correlations: correlations }
    }
}

/// Exact `S_n` for the distributed state `rho` with Bob's receiver at
/// orientation `theta` (radians). No loss is applied beyond what the
/// receiver itself discards.
pub fn steering_parameter_exact(
    rho: &DensityMatrix,
    set: &MeasurementSet,
    encoding: Encoding,
    theta: f64,
) -> Result<SteeringEstimate> {
    exact_with_receiver(rho, set, &Receiver::new(encoding), theta)
}

pub fn exact_with_receiver(
    rho: &DensityMatrix,
    set: &MeasurementSet,
    receiver: &Receiver,
    theta: f64,
) -> Result<SteeringEstimate> {
    let expected = 2 * receiver.bob_dim();
    if rho.dim() != expected {
        return Err(Error::DimensionMismatch { expected, found: rho.dim() });
    }
    let mut correlations = Vec::with_capacity(set.n());
    let mut announced_total = 0.0;
    for (k, u) in set.directions().iter().enumerate() {
        let mut corr = 0.0;
        let mut announced = 0.0;
        for a in [1i8, -1] {
            let alice = polarization_projector(u, a);
            for b in [1i8, -1] {
                let joint = alice.kronecker(receiver.analyzer(u, theta, b).matrix());
                let p = (rho.matrix() * joint).trace().re;
                corr += f64::from(a) * f64::from(-b) * p;
                announced += p;
            }
        }
        if announced <= 0.0 {
            return Err(Error::NoAnnouncedEvents { setting: k });
        }
        correlations.push(corr / announced);
        announced_total += announced;
    }
    let zeros = vec![0.0; set.n()];
    Ok(SteeringEstimate::from_parts(correlations, &zeros, announced_total / set.n() as f64))
}

/// Bob's response in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BobResponse {
    Outcome(i8),
    Null,
}

/// Per-setting tally of `(Alice outcome, Bob outcome or null)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingTally {
    /// `counts[a][b]` with `a ∈ {+1, −1}` as 0, 1 and `b ∈ {+1, −1, null}` as 0, 1, 2.
    pub counts: [[u64; 3]; 2],
}

impl SettingTally {
    pub fn record(&mut self, alice: i8, bob: BobResponse) {
        let a = usize::from(alice < 0);
        let b = match bob {
            BobResponse::Outcome(o) if o > 0 => 0,
            BobResponse::Outcome(_) => 1,
            BobResponse::Null => 2,
        };
        self.counts[a][b] += 1;
    }

    pub fn merge(&mut self, other: &SettingTally) {
        for a in 0..2 {
            for b in 0..3 {
                self.counts[a][b] += other.counts[a][b];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn announced(&self) -> u64 {
        self.counts.iter().map(|row| row[0] + row[1]).sum()
    }

    /// Rounds where Alice's outcome matches the negated analyzer outcome.
    pub fn agree(&self) -> u64 {
        self.counts[0][1] + self.counts[1][0]
    }

    pub fn disagree(&self) -> u64 {
        self.counts[0][0] + self.counts[1][1]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub settings: Vec<SettingTally>,
}

impl CountTable {
    pub fn new(n: usize) -> Self {
        Self { settings: vec![SettingTally::default(); n] }
    }

    pub fn merge(mut self, other: &CountTable) -> Self {
        if self.settings.len() < other.settings.len() {
            self.settings.resize(other.settings.len(), SettingTally::default());
        }
        for (mine, theirs) in self.settings.iter_mut().zip(&other.settings) {
            mine.merge(theirs);
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.settings.iter().map(SettingTally::total).sum()
    }

    pub fn announced(&self) -> u64 {
        self.settings.iter().map(SettingTally::announced).sum()
    }
}

/// Empirical `S_n` with binomial standard error combined in quadrature.
pub fn steering_parameter_counts(counts: &CountTable) -> Result<SteeringEstimate> {
    if counts.settings.is_empty() {
        return Err(Error::InvalidParameter("empty count table".into()));
    }
    let mut correlations = Vec::with_capacity(counts.settings.len());
    let mut variances = Vec::with_capacity(counts.settings.len());
    for (k, tally) in counts.settings.iter().enumerate() {
        let n = tally.announced();
        if n == 0 {
            return Err(Error::NoAnnouncedEvents { setting: k });
        }
        let corr = (tally.agree() as f64 - tally.disagree() as f64) / n as f64;
        correlations.push(corr);
        variances.push((1.0 - corr * corr).max(0.0) / n as f64);
    }
    let announce_fraction = counts.announced() as f64 / counts.total() as f64;
    Ok(SteeringEstimate::from_parts(correlations, &variances, announce_fraction))
}

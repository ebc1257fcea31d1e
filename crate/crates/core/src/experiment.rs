//! Seeded finite-statistics steering runs.
//!
//! Every round draws a setting uniformly, an orientation from the
//! [`ThetaPolicy`], and one joint outcome from the Born probabilities of
//! Alice's polarization projector and Bob's analyzer. Bob's detector fires
//! with probability `bob_efficiency` independently of the state; whatever the
//! analyzer rejects is also reported as null.
//!
//! Trials are split into fixed-size chunks, each with its own ChaCha stream
//! derived from the seed, so results do not depend on the number of worker
//! threads.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{loss_tolerant_bound_with, AnnounceConstraint};
use crate::encoding::{polarization_projector, werner, werner_visibility_for_fidelity, Encoding, Receiver};
use crate::error::{Error, Result};
use crate::qmath::{c, CMatrix, DensityMatrix};
use crate::steering::{steering_parameter_counts, CountTable, MeasurementSet, SteeringEstimate};

/// Roughly 100 s of coincidences at 20 000 pairs per second.
pub const DEFAULT_TRIALS: u64 = 2_000_000;

const CHUNK: u64 = 1 << 16;

/// Imperfect source: Werner mixture about the singlet, then optional
/// dephasing in the `H/V` basis of both photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub werner_v: f64,
    #[serde(default)]
    pub dephasing: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { werner_v: 1.0, dephasing: 0.0 }
    }
}

impl NoiseModel {
    pub fn new(werner_v: f64, dephasing: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&werner_v) {
            return Err(Error::InvalidParameter(format!("Werner visibility {werner_v} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&dephasing) {
            return Err(Error::InvalidParameter(format!("dephasing {dephasing} outside [0, 1]")));
        }
        Ok(Self { werner_v, dephasing })
    }

    /// Werner noise with the given singlet fidelity.
    pub fn from_fidelity(fidelity: f64) -> Result<Self> {
        Self::new(werner_visibility_for_fidelity(fidelity)?, 0.0)
    }

    /// The two-photon polarization state before Bob's encoder.
    pub fn polarization_state(&self) -> Result<DensityMatrix> {
        let w = werner(self.werner_v)?;
        if self.dephasing == 0.0 {
            return Ok(w);
        }
        let m = w.matrix();
        let diag = CMatrix::from_diagonal(&m.diagonal());
        DensityMatrix::new(m * c(1.0 - self.dephasing, 0.0) + diag * c(self.dephasing, 0.0))
    }
}

/// Shared state for the chosen encoding with the default receiver.
pub fn prepare_state(noise: &NoiseModel, encoding: Encoding) -> Result<DensityMatrix> {
    Receiver::new(encoding).distribute(&noise.polarization_state()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Probability that Bob's detector reports a photon that reached it.
    pub bob_efficiency: f64,
    /// Alice's heralding efficiency. Trusted, so it only sets how many pairs
    /// are needed for the requested number of heralded rounds.
    pub alice_efficiency: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self { bob_efficiency: 1.0, alice_efficiency: 1.0 }
    }
}

impl ChannelModel {
    pub fn new(bob_efficiency: f64, alice_efficiency: f64) -> Result<Self> {
        for (name, e) in [("Bob", bob_efficiency), ("Alice", alice_efficiency)] {
            if !(e > 0.0 && e <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} efficiency {e} outside (0, 1]")));
            }
        }
        Ok(Self { bob_efficiency, alice_efficiency })
    }

    /// Pairs the source must emit to yield `trials` heralded rounds on average.
    pub fn pairs_emitted(&self, trials: u64) -> u64 {
        (trials as f64 / self.alice_efficiency).ceil() as u64
    }
}

/// How Bob's receiver is oriented during a run. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ThetaPolicy {
    Fixed { theta: f64 },
    /// A fresh uniform angle every round.
    PerTrial { min: f64, max: f64 },
    /// One uniform angle per setting, held for the whole run.
    PerSetting { min: f64, max: f64 },
}

impl ThetaPolicy {
    /// Uniform per-round orientation over `[0, π/2]`.
    pub fn dynamic() -> Self {
        ThetaPolicy::PerTrial { min: 0.0, max: FRAC_PI_2 }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ThetaPolicy::Fixed { theta } if theta.is_finite() => Ok(()),
            ThetaPolicy::PerTrial { min, max } | ThetaPolicy::PerSetting { min, max }
                if min.is_finite() && max.is_finite() && min < max =>
            {
                Ok(())
            }
            other => Err(Error::InvalidParameter(format!("invalid orientation policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringRunResult {
    pub n: usize,
    pub encoding: Encoding,
    pub theta_policy: ThetaPolicy,
    /// Heralded rounds simulated.
    pub trials: u64,
    pub pairs_emitted: u64,
    pub estimate: SteeringEstimate,
    pub bound_at_observed_xi: f64,
    /// `s − 2σ` exceeds the bound.
    pub violated: bool,
    pub seed: u64,
}

/// A real trigonometric polynomial `a0 + Σ_m (a_m cos mθ + b_m sin mθ)`.
#[derive(Debug, Clone)]
struct Trig {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Trig {
    /// Interpolates from samples at `θ_j = 2πj/K` with odd `K`; exact for
    /// degree at most `(K − 1)/2`.
    fn fit(samples: &[f64]) -> Self {
        let k = samples.len();
        let degree = (k - 1) / 2;
        let a0 = samples.iter().sum::<f64>() / k as f64;
        let mut cos = vec![0.0; degree];
        let mut sin = vec![0.0; degree];
        for m in 1..=degree {
            for (j, f) in samples.iter().enumerate() {
                let t = 2.0 * PI * (m * j) as f64 / k as f64;
                cos[m - 1] += 2.0 * f * t.cos() / k as f64;
                sin[m - 1] += 2.0 * f * t.sin() / k as f64;
            }
        }
        Self { a0, cos, sin }
    }

    fn eval(&self, theta: f64) -> f64 {
        let (s1, c1) = theta.sin_cos();
        let (mut s, mut co) = (0.0, 1.0);
        let mut v = self.a0;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            (s, co) = (s * c1 + co * s1, co * c1 - s * s1);
            v += a * co + b * s;
        }
        v
    }
}

/// Outcome distribution of one setting as a function of orientation.
#[derive(Debug, Clone)]
struct SettingModel {
    alice: [f64; 2],
    /// `joint[a][b]` for `a, b ∈ {+1, −1}` before detector efficiency.
    joint: [[Trig; 2]; 2],
}

impl SettingModel {
    fn probabilities(&self, theta: f64, efficiency: f64) -> [f64; 6] {
        let mut p = [0.0; 6];
        for a in 0..2 {
            let plus = self.joint[a][0].eval(theta).max(0.0);
            let minus = self.joint[a][1].eval(theta).max(0.0);
            p[3 * a] = efficiency * plus;
            p[3 * a + 1] = efficiency * minus;
            p[3 * a + 2] = (self.alice[a] - efficiency * (plus + minus)).max(0.0);
        }
        p
    }
}

/// Highest frequency in `θ` of any analyzer matrix element.
fn max_frequency(receiver: &Receiver) -> usize {
    match receiver.encoding {
        Encoding::Polarization => 2,
        Encoding::Vortex => (2 + receiver.space.oam.l_max - receiver.space.oam.l_min) as usize,
    }
}

fn setting_models(state: &DensityMatrix, set: &MeasurementSet, receiver: &Receiver) -> Result<Vec<SettingModel>> {
    let expected = 2 * receiver.bob_dim();
    if state.dim() != expected {
        return Err(Error::DimensionMismatch { expected, found: state.dim() });
    }
    let k = 2 * max_frequency(receiver) + 1;
    let thetas: Vec<f64> = (0..k).map(|j| 2.0 * PI * j as f64 / k as f64).collect();
    let bob_id = CMatrix::identity(receiver.bob_dim(), receiver.bob_dim());
    let prob = |op: &CMatrix| (state.matrix() * op).trace().re;
    Ok(set
        .directions()
        .iter()
        .map(|u| {
            let alice_proj = [polarization_projector(u, 1), polarization_projector(u, -1)];
            let alice = [prob(&alice_proj[0].kronecker(&bob_id)), prob(&alice_proj[1].kronecker(&bob_id))];
            let joint = [0, 1].map(|a| {
                [1i8, -1].map(|b| {
                    let samples: Vec<f64> = thetas
                        .iter()
                        .map(|&t| prob(&alice_proj[a].kronecker(receiver.analyzer(u, t, b).matrix())))
                        .collect();
                    Trig::fit(&samples)
                })
            });
            SettingModel { alice, joint }
        })
        .collect())
}

fn sample(probs: &[f64; 6], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    let target = u * total;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(5)
}

/// Derives the seed of the `index`-th run of a sweep.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Settings, receiver and channel shared by a series of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub set: MeasurementSet,
    pub receiver: Receiver,
    pub channel: ChannelModel,
    pub announce_constraint: AnnounceConstraint,
}

impl Experiment {
    pub fn new(set: MeasurementSet, encoding: Encoding, channel: ChannelModel) -> Self {
        Self { set, receiver: Receiver::new(encoding), channel, announce_constraint: AnnounceConstraint::default() }
    }

    pub fn with_receiver(mut self, receiver: Receiver) -> Self {
        self.receiver = receiver;
        self
    }

    pub fn with_announce_constraint(mut self, constraint: AnnounceConstraint) -> Self {
        self.announce_constraint = constraint;
        self
    }

    /// Simulates `trials` heralded rounds on `state` and tests the result
    /// against the bound at the observed announce fraction.
    pub fn run(&self, state: &DensityMatrix, policy: ThetaPolicy, trials: u64, seed: u64) -> Result<SteeringRunResult> {
        policy.validate()?;
        let n = self.set.n();
        if trials < n as u64 {
            return Err(Error::InvalidParameter(format!("{trials} trials is fewer than {n} settings")));
        }
        let models = setting_models(state, &self.set, &self.receiver)?;
        let eta = self.channel.bob_efficiency;

        let fixed: Option<Vec<[f64; 6]>> = match policy {
            ThetaPolicy::Fixed { theta } => Some(models.iter().map(|m| m.probabilities(theta, eta)).collect()),
            ThetaPolicy::PerSetting { min, max } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(u64::MAX);
                Some(models.iter().map(|m| m.probabilities(rng.random_range(min..max), eta)).collect())
            }
            ThetaPolicy::PerTrial { .. } => None,
        };

        let chunks = trials.div_ceil(CHUNK);
        let counts = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(chunk);
                let len = CHUNK.min(trials - chunk * CHUNK);
                let mut table = CountTable::new(n);
                for _ in 0..len {
                    let k = rng.random_range(0..n);
                    let probs = match (&fixed, policy) {
                        (Some(p), _) => p[k],
                        (None, ThetaPolicy::PerTrial { min, max }) => {
                            models[k].probabilities(rng.random_range(min..max), eta)
                        }
                        (None, _) => unreachable!("only per-trial orientation is drawn per round"),
                    };
                    let idx = sample(&probs, rng.random());
                    table.settings[k].counts[idx / 3][idx % 3] += 1;
                }
                table
            })
            .reduce(|| CountTable::new(n), |a, b| a.merge(&b));

        let estimate = steering_parameter_counts(&counts)?;
        let (bound, _) = loss_tolerant_bound_with(&self.set, estimate.announce_fraction, self.announce_constraint)?;
        Ok(SteeringRunResult {
            n,
            encoding: self.receiver.encoding,
            theta_policy: policy,
            trials,
            pairs_emitted: self.channel.pairs_emitted(trials),
            violated: estimate.s_value - 2.0 * estimate.std_err > bound,
            estimate,
            bound_at_observed_xi: bound,
            seed,
        })
    }

    /// One fixed-orientation run per angle in `[0, 2π)`.
    pub fn sweep(&self, state: &DensityMatrix, thetas: &[f64], trials: u64, seed: u64) -> Result<Vec<SteeringRunResult>> {
        if let Some(t) = thetas.iter().find(|t| !(0.0..2.0 * PI).contains(*t)) {
            return Err(Error::InvalidParameter(format!("orientation {t} rad outside [0, 2π)")));
        }
        thetas
            .iter()
            .enumerate()
            .map(|(i, &theta)| self.run(state, ThetaPolicy::Fixed { theta }, trials, derive_seed(seed, i as u64)))
            .collect()
    }

    /// Receiver orientation drawn uniformly from `[0, π/2]` every round.
    pub fn dynamic(&self, state: &DensityMatrix, trials: u64, seed: u64) -> Result<SteeringRunResult> {
        self.run(state, ThetaPolicy::dynamic(), trials, seed)
    }
}

pub fn run_experiment(
    state: &DensityMatrix,
    set: &MeasurementSet,
    encoding: Encoding,
    channel: ChannelModel,
    policy: ThetaPolicy,
    trials: u64,
    seed: u64,
) -> Result<SteeringRunResult> {
    Experiment::new(set.clone(), encoding, channel).run(state, policy, trials, seed)
}

pub fn sweep_theta(
    state: &DensityMatrix,
    set: &MeasurementSet,
    encoding: Encoding,
    channel: ChannelModel,
    thetas: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SteeringRunResult>> {
    Experiment::new(set.clone(), encoding, channel).sweep(state, thetas, trials, seed)
}

pub fn dynamic_rotation_run(
    state: &DensityMatrix,
    set: &MeasurementSet,
    encoding: Encoding,
    channel: ChannelModel,
    trials: u64,
    seed: u64,
) -> Result<SteeringRunResult> {
    Experiment::new(set.clone(), encoding, channel).dynamic(state, trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::singlet_polarization;
    use crate::qmath::{fidelity_pure, purity, trace_distance};
    use crate::steering::{exact_with_receiver, platonic_set};
    use approx::assert_abs_diff_eq;

    #[test]
    fn prepared_states() {
        let ideal = prepare_state(&NoiseModel::default(), Encoding::Polarization).unwrap();
        assert!(trace_distance(&ideal, &singlet_polarization().to_density()).unwrap() < 1e-12);

        let noise = NoiseModel::from_fidelity(0.977).unwrap();
        assert_abs_diff_eq!(noise.werner_v, (4.0 * 0.977 - 1.0) / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(noise.werner_v, 0.9693, epsilon = 1e-4);

        let mixed = prepare_state(&NoiseModel::new(0.0, 0.0).unwrap(), Encoding::Polarization).unwrap();
        assert!(trace_distance(&mixed, &DensityMatrix::maximally_mixed(4)).unwrap() < 1e-12);

        for encoding in [Encoding::Polarization, Encoding::Vortex] {
            let target = Receiver::new(encoding).target_state();
            for v in [0.0, 0.5, 0.9693, 1.0] {
                let rho = prepare_state(&NoiseModel::new(v, 0.0).unwrap(), encoding).unwrap();
                assert_abs_diff_eq!(fidelity_pure(&target, &rho).unwrap(), v + (1.0 - v) / 4.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dephasing_lowers_purity_and_keeps_populations() {
        let base = NoiseModel::new(0.95, 0.0).unwrap().polarization_state().unwrap();
        let dephased = NoiseModel::new(0.95, 0.3).unwrap().polarization_state().unwrap();
        assert!(purity(&dephased) < purity(&base));
        for i in 0..4 {
            assert_abs_diff_eq!(dephased.matrix()[(i, i)].re, base.matrix()[(i, i)].re, epsilon = 1e-15);
        }
        assert!(NoiseModel::new(1.2, 0.0).is_err());
        assert!(NoiseModel::new(0.5, -0.1).is_err());
        assert!(ChannelModel::new(0.0, 1.0).is_err());
        assert!(ChannelModel::new(0.5, 1.1).is_err());
    }

    #[test]
    fn trig_models_match_direct_evaluation() {
        let set = platonic_set(3).unwrap();
        for encoding in [Encoding::Polarization, Encoding::Vortex] {
            let receiver = Receiver::new(encoding);
            let rho = prepare_state(&NoiseModel::new(0.8, 0.1).unwrap(), encoding).unwrap();
            let models = setting_models(&rho, &set, &receiver).unwrap();
            let bob_id = CMatrix::identity(receiver.bob_dim(), receiver.bob_dim());
            for theta in [0.0, 0.3, 1.1, 2.5, 4.0, 6.1] {
                for (u, m) in set.directions().iter().zip(&models) {
                    let p = m.probabilities(theta, 0.7);
                    for (ai, a) in [1i8, -1].into_iter().enumerate() {
                        let pa = polarization_projector(u, a);
                        for (bi, b) in [1i8, -1].into_iter().enumerate() {
                            let op = pa.kronecker(receiver.analyzer(u, theta, b).matrix());
                            let direct = (rho.matrix() * op).trace().re;
                            assert_abs_diff_eq!(p[3 * ai + bi], 0.7 * direct, epsilon = 1e-12);
                        }
                        let marginal = (rho.matrix() * pa.kronecker(&bob_id)).trace().re;
                        assert_abs_diff_eq!(p[3 * ai..3 * ai + 3].iter().sum::<f64>(), marginal, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn lossless_fixed_run_tracks_exact_value() {
        let set = platonic_set(3).unwrap();
        let rho = prepare_state(&NoiseModel::new(0.9, 0.0).unwrap(), Encoding::Polarization).unwrap();
        let theta = 0.4;
        let exact = exact_with_receiver(&rho, &set, &Receiver::new(Encoding::Polarization), theta).unwrap();
        let run = run_experiment(&rho, &set, Encoding::Polarization, ChannelModel::default(), ThetaPolicy::Fixed { theta }, 200_000, 5)
            .unwrap();
        assert!((run.estimate.s_value - exact.s_value).abs() < 3.0 * run.estimate.std_err);
        assert_eq!(run.estimate.announce_fraction, 1.0);
    }

    #[test]
    fn identical_seeds_reproduce_bit_for_bit() {
        let set = platonic_set(4).unwrap();
        let rho = prepare_state(&NoiseModel::new(0.9693, 0.0).unwrap(), Encoding::Vortex).unwrap();
        let channel = ChannelModel::new(0.45, 0.8).unwrap();
        let a = run_experiment(&rho, &set, Encoding::Vortex, channel, ThetaPolicy::dynamic(), 150_000, 11).unwrap();
        let b = run_experiment(&rho, &set, Encoding::Vortex, channel, ThetaPolicy::dynamic(), 150_000, 11).unwrap();
        let c = run_experiment(&rho, &set, Encoding::Vortex, channel, ThetaPolicy::dynamic(), 150_000, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.estimate, c.estimate);
        assert_eq!(a.pairs_emitted, 187_500);
    }

    #[test]
    fn run_argument_validation() {
        let set = platonic_set(3).unwrap();
        let rho = prepare_state(&NoiseModel::default(), Encoding::Polarization).unwrap();
        let ch = ChannelModel::default();
        let fixed = ThetaPolicy::Fixed { theta: 0.0 };
        assert!(run_experiment(&rho, &set, Encoding::Polarization, ch, fixed, 0, 1).is_err());
        assert!(run_experiment(&rho, &set, Encoding::Polarization, ch, fixed, 2, 1).is_err());
        assert!(run_experiment(&rho, &set, Encoding::Vortex, ch, fixed, 100, 1).is_err());
        let bad = ThetaPolicy::PerTrial { min: 1.0, max: 1.0 };
        assert!(run_experiment(&rho, &set, Encoding::Polarization, ch, bad, 100, 1).is_err());
        assert!(sweep_theta(&rho, &set, Encoding::Polarization, ch, &[], 100, 1).unwrap().is_empty());
        assert!(sweep_theta(&rho, &set, Encoding::Polarization, ch, &[2.0 * PI], 100, 1).is_err());
        assert!(dynamic_rotation_run(&rho, &set, Encoding::Polarization, ch, 0, 1).is_err());
    }

    #[test]
    fn sweep_seeds_are_distinct_and_stable() {
        let seeds: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 100);
        assert_eq!(derive_seed(42, 3), seeds[3]);
        assert_ne!(derive_seed(43, 3), seeds[3]);
    }
}

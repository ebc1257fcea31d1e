//! Simulated two-qubit polarization tomography.
//!
//! Each setting is a product projector `|α><α| ⊗ |β><β|`. Counts are Poisson
//! with mean `counts_per_setting · p`. Reconstruction starts from a
//! least-squares linear inversion in the Pauli-product basis, clips negative
//! eigenvalues, and then climbs the likelihood with diluted `RρR` steps.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::encoding::{ket_a, ket_d, ket_h, ket_l, ket_r, ket_v};
use crate::error::{Error, Result};
use crate::qmath::{
    c, fidelity_pure, hermitian_eigenvalues, pauli_x, pauli_y, pauli_z, purity, CMatrix, DensityMatrix, StateVector,
    Tensor,
};

pub const DEFAULT_COUNTS_PER_SETTING: f64 = 10_000.0;
pub const MAX_ITERATIONS: usize = 10_000;
/// Convergence threshold on the per-count log-likelihood gain.
pub const LIKELIHOOD_TOL: f64 = 1e-10;

/// Eigenvalue given to clipped directions so the iteration can reach them.
const CLIP_FLOOR: f64 = 1e-9;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TomographySpec {
    /// `(Alice ket, Bob ket)` for each product projector.
    pub settings: Vec<(StateVector, StateVector)>,
    pub counts_per_setting: f64,
}

fn pauli_eigenstates() -> [StateVector; 6] {
    [ket_h(), ket_v(), ket_d(), ket_a(), ket_r(), ket_l()]
}

/// All 36 pairs of `H, V, D, A, R, L`.
pub fn standard_settings() -> TomographySpec {
    let kets = pauli_eigenstates();
    let settings = kets.iter().flat_map(|a| kets.iter().map(move |b| (a.clone(), b.clone()))).collect();
    TomographySpec { settings, counts_per_setting: DEFAULT_COUNTS_PER_SETTING }
}

/// The 16 pairs of `H, V, D, R`, the smallest complete product set.
pub fn minimal_settings() -> TomographySpec {
    let kets = [ket_h(), ket_v(), ket_d(), ket_r()];
    let settings = kets.iter().flat_map(|a| kets.iter().map(move |b| (a.clone(), b.clone()))).collect();
    TomographySpec { settings, counts_per_setting: DEFAULT_COUNTS_PER_SETTING }
}

impl TomographySpec {
    pub fn with_counts(mut self, counts_per_setting: f64) -> Result<Self> {
        if !(counts_per_setting > 0.0 && counts_per_setting.is_finite()) {
            return Err(Error::InvalidParameter(format!("counts per setting {counts_per_setting} must be positive")));
        }
        self.counts_per_setting = counts_per_setting;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.settings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.settings.is_empty()
    }

    pub fn projector(&self, i: usize) -> CMatrix {
        let (a, b) = &self.settings[i];
        a.tensor(b).projector()
    }

    /// Real design matrix `A[i][μν] = Tr(P_i σ_μ ⊗ σ_ν) / 4`.
    fn design(&self) -> DMatrix<f64> {
        let basis = pauli_basis();
        DMatrix::from_fn(self.len(), 16, |i, j| (self.projector(i) * &basis[j]).trace().re / 4.0)
    }

    /// Rank of the span of the projectors; 16 means informationally complete.
    pub fn gram_rank(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        let sv = self.design().singular_values();
        let max = sv.max();
        sv.iter().filter(|s| **s > RANK_TOL * max).count()
    }
}

fn pauli_basis() -> Vec<CMatrix> {
    let paulis = [CMatrix::identity(2, 2), pauli_x(), pauli_y(), pauli_z()];
    paulis.iter().flat_map(|s| paulis.iter().map(move |t| s.kronecker(t))).collect()
}

pub fn born_probabilities(rho: &DensityMatrix, spec: &TomographySpec) -> Result<Vec<f64>> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
    }
    Ok((0..spec.len()).map(|i| (rho.matrix() * spec.projector(i)).trace().re.max(0.0)).collect())
}

/// Mean counts `counts_per_setting · p_i`, for noiseless reconstruction.
pub fn expected_counts(rho: &DensityMatrix, spec: &TomographySpec) -> Result<Vec<f64>> {
    Ok(born_probabilities(rho, spec)?.into_iter().map(|p| p * spec.counts_per_setting).collect())
}

/// Poisson counts per setting, each from its own ChaCha stream.
pub fn simulate_counts(rho: &DensityMatrix, spec: &TomographySpec, seed: u64) -> Result<Vec<f64>> {
    expected_counts(rho, spec)?
        .into_iter()
        .enumerate()
        .map(|(i, mean)| {
            if mean <= 0.0 {
                return Ok(0.0);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let dist = Poisson::new(mean).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(dist.sample(&mut rng))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    #[serde(skip)]
    pub rho_hat: DensityMatrix,
    pub fidelity_to_target: f64,
    pub purity: f64,
    /// `Σ n_i ln(p_i / Σ_j p_j)` at `rho_hat`.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Per-count log-likelihood after each accepted step, starting point first.
    #[serde(skip)]
    pub history: Vec<f64>,
}

/// Least-squares inversion, trace-normalized; may be unphysical.
pub fn linear_inversion(counts: &[f64], spec: &TomographySpec) -> Result<CMatrix> {
    check_counts(counts, spec)?;
    let a = spec.design();
    let svd = a.svd(true, true);
    let max = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > RANK_TOL * max).count();
    if rank < 16 {
        return Err(Error::RankDeficient { rank });
    }
    let b = DVector::from_column_slice(counts);
    let x = svd.solve(&b, RANK_TOL * max).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    if x[0] <= 0.0 {
        return Err(Error::InvalidParameter("counts carry no trace information".into()));
    }
    let basis = pauli_basis();
    let m = basis.iter().zip(x.iter()).fold(CMatrix::zeros(4, 4), |acc, (s, r)| acc + s * c(r / x[0] / 4.0, 0.0));
    Ok((&m + m.adjoint()) * c(0.5, 0.0))
}

fn check_counts(counts: &[f64], spec: &TomographySpec) -> Result<()> {
    if counts.len() != spec.len() {
        return Err(Error::DimensionMismatch { expected: spec.len(), found: counts.len() });
    }
    if counts.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
        return Err(Error::InvalidParameter("counts must be finite and non-negative".into()));
    }
    if counts.iter().sum::<f64>() <= 0.0 {
        return Err(Error::InvalidParameter("no counts recorded".into()));
    }
    Ok(())
}

/// Clips negative eigenvalues to a small floor and renormalizes.
fn make_physical(m: &CMatrix) -> Result<DensityMatrix> {
    if hermitian_eigenvalues(m)[0] >= 0.0 {
        return DensityMatrix::from_unnormalized(m.clone());
    }
    let eig = ((m + m.adjoint()) * c(0.5, 0.0)).symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| c(l.max(CLIP_FLOOR), 0.0));
    let v = &eig.eigenvectors;
    DensityMatrix::from_unnormalized(v * CMatrix::from_diagonal(&clipped) * v.adjoint())
}

struct Likelihood<'a> {
    counts: &'a [f64],
    projectors: Vec<CMatrix>,
    total: f64,
}

impl Likelihood<'_> {
    fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.projectors.iter().map(|p| (rho * p).trace().re.max(f64::MIN_POSITIVE)).collect()
    }

    /// Per-count profile log-likelihood.
    fn value(&self, rho: &CMatrix) -> f64 {
        let p = self.probabilities(rho);
        let norm: f64 = p.iter().sum();
        self.counts.iter().zip(&p).filter(|(n, _)| **n > 0.0).map(|(n, p)| n * (p / norm).ln()).sum::<f64>()
            / self.total
    }

    /// `D = (Σp/Σn) Σ n_i P_i / p_i − Σ P_i`, the likelihood gradient up to scale.
    fn direction(&self, rho: &CMatrix) -> CMatrix {
        let p = self.probabilities(rho);
        let norm: f64 = p.iter().sum();
        let mut d = CMatrix::zeros(4, 4);
        for ((n, p), proj) in self.counts.iter().zip(&p).zip(&self.projectors) {
            d += proj * c(norm * n / (self.total * p) - 1.0, 0.0);
        }
        d
    }
}

fn step(rho: &CMatrix, d: &CMatrix, eps: f64) -> CMatrix {
    let r = CMatrix::identity(4, 4) + d * c(eps, 0.0);
    let next = &r * rho * &r;
    let tr = next.trace().re;
    let next = next * c(1.0 / tr, 0.0);
    (&next + next.adjoint()) * c(0.5, 0.0)
}

/// Maximum-likelihood reconstruction; `target` sets the reported fidelity.
pub fn reconstruct(counts: &[f64], spec: &TomographySpec, target: &StateVector) -> Result<ReconstructionReport> {
    if target.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: target.dim() });
    }
    let start = make_physical(&linear_inversion(counts, spec)?)?;
    let lik = Likelihood {
        counts,
        projectors: (0..spec.len()).map(|i| spec.projector(i)).collect(),
        total: counts.iter().sum(),
    };

    let g_max = hermitian_eigenvalues(&lik.projectors.iter().fold(CMatrix::zeros(4, 4), |acc, p| acc + p))[3];
    let mut eps = 1.0 / g_max;
    let mut rho = start.matrix().clone();
    let mut ell = lik.value(&rho);
    let mut history = vec![ell];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let d = lik.direction(&rho);
        let mut trial_eps = eps;
        let mut accepted = None;
        while trial_eps > 1e-14 / g_max {
            let candidate = step(&rho, &d, trial_eps);
            let value = lik.value(&candidate);
            if value > ell {
                accepted = Some((candidate, value));
                break;
            }
            trial_eps /= 2.0;
        }
        let Some((candidate, value)) = accepted else {
            converged = true;
            break;
        };
        let gain = value - ell;
        rho = candidate;
        ell = value;
        history.push(ell);
        eps = (trial_eps * 2.0).min(1e3 / g_max);
        if gain < LIKELIHOOD_TOL {
            converged = true;
            break;
        }
    }

    let rho_hat = DensityMatrix::from_unnormalized(rho)?;
    Ok(ReconstructionReport {
        fidelity_to_target: fidelity_pure(target, &rho_hat)?,
        purity: purity(&rho_hat),
        log_likelihood: ell * lik.total,
        iterations,
        converged,
        history,
        rho_hat,
    })
}

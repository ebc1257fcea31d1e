//! Polarization and OAM mode spaces, the q-plate, beam-axis rotations and
//! Bob's reverse-conversion analyzer.
//!
//! Conventions, fixed for the whole crate:
//!
//! * The polarization factor is stored in the `{|H>, |V>}` basis (index 0, 1),
//!   with `|L> = (|H> + i|V>)/√2` and `|R> = (|H> − i|V>)/√2`, equivalently
//!   `|H> = (|L> + |R>)/√2` and `|V> = −i(|L> − |R>)/√2`.
//! * Polarization Bloch axes: `+z = |L>`, `+x = |H>`, `+y = |D>`. Linear
//!   polarizations sit on the equator, circular ones on the poles.
//! * A single photon lives in `pol ⊗ OAM` with polarization as the major index.
//! * Rotating the apparatus by `θ` about the beam axis multiplies `|σ, l>` by
//!   `exp(−i(σ + l)θ)` with helicity `σ = +1` for `|L>` and `−1` for `|R>`.
//!   States of zero total angular momentum, `|L, −1>` and `|R, +1>`, are fixed.
//! * A q-plate of charge `q` maps `|L, l> → e^{2iα}|R, l + 2q>` and
//!   `|R, l> → e^{−2iα}|L, l − 2q>` where `α` is its phase offset.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{c, BlochVector, CMatrix, CVector, DensityMatrix, ModeOperator, OperatorKind, StateVector, C64};

/// Amplitude below which a basis state is considered unpopulated.
const POPULATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// Bob's photon keeps its polarization qubit (no q-plates).
    Polarization,
    /// Bob's photon carries the rotation-invariant vector vortex qubit.
    Vortex,
}

impl Encoding {
    pub fn as_str(&self) -> &'static str {
        match self {
            Encoding::Polarization => "polarization",
            Encoding::Vortex => "vortex",
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "polarization" | "pol" => Ok(Encoding::Polarization),
            "vortex" | "vv" => Ok(Encoding::Vortex),
            other => Err(Error::InvalidParameter(format!("unknown encoding '{other}'"))),
        }
    }
}

impl std::fmt::Display for Encoding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Circular polarization component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Circular {
    L,
    R,
}

impl Circular {
    pub fn helicity(self) -> i32 {
        match self {
            Circular::L => 1,
            Circular::R => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Circular::L => Circular::R,
            Circular::R => Circular::L,
        }
    }

    /// Components in the `{H, V}` basis.
    fn hv(self) -> [C64; 2] {
        let s = FRAC_1_SQRT_2;
        match self {
            Circular::L => [c(s, 0.0), c(0.0, s)],
            Circular::R => [c(s, 0.0), c(0.0, -s)],
        }
    }
}

pub fn ket_h() -> StateVector {
    StateVector::basis(2, 0)
}

pub fn ket_v() -> StateVector {
    StateVector::basis(2, 1)
}

pub fn ket_d() -> StateVector {
    StateVector::from_slice(&[c(1.0, 0.0), c(1.0, 0.0)]).expect("nonzero")
}

pub fn ket_a() -> StateVector {
    StateVector::from_slice(&[c(1.0, 0.0), c(-1.0, 0.0)]).expect("nonzero")
}

pub fn ket_l() -> StateVector {
    StateVector::from_slice(&Circular::L.hv()).expect("nonzero")
}

pub fn ket_r() -> StateVector {
    StateVector::from_slice(&Circular::R.hv()).expect("nonzero")
}

/// Change of basis whose columns are `|L>`, `|R>` written in `{H, V}`.
fn circular_to_hv() -> CMatrix {
    let [l0, l1] = Circular::L.hv();
    let [r0, r1] = Circular::R.hv();
    CMatrix::from_row_slice(2, 2, &[l0, r0, l1, r1])
}

/// `u·σ` for a polarization Bloch direction, as a matrix in `{H, V}`.
pub fn polarization_observable(u: &BlochVector) -> CMatrix {
    // Bloch x, y, z are H, D, L; in {H, V} these are σ_z, σ_x, σ_y.
    BlochVector::new(u.y, u.z, u.x).pauli_matrix()
}

/// Projector onto the `outcome = ±1` eigenspace of `u·σ` on a polarization qubit.
pub fn polarization_projector(u: &BlochVector, outcome: i8) -> CMatrix {
    let sign = if outcome >= 0 { 1.0 } else { -1.0 };
    (CMatrix::identity(2, 2) + polarization_observable(u) * c(sign, 0.0)) * c(0.5, 0.0)
}

/// Beam-axis rotation acting on a bare polarization qubit.
pub fn polarization_rotation(theta: f64) -> CMatrix {
    let diag = CMatrix::from_diagonal(&CVector::from_column_slice(&[
        C64::from_polar(1.0, -theta),
        C64::from_polar(1.0, theta),
    ]));
    let u = circular_to_hv();
    &u * diag * u.adjoint()
}

/// Window of OAM quantum numbers `l_min..=l_max` (units of ħ per photon).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OamSpace {
    pub l_min: i32,
    pub l_max: i32,
}

impl Default for OamSpace {
    /// `l ∈ {−2, …, 2}`: one forward and one reverse `q = 1/2` plate from `l = 0`.
    fn default() -> Self {
        Self { l_min: -2, l_max: 2 }
    }
}

impl OamSpace {
    pub fn new(l_min: i32, l_max: i32) -> Result<Self> {
        if l_min > 0 || l_max < 0 {
            return Err(Error::InvalidOamSpace { l_min, l_max });
        }
        Ok(Self { l_min, l_max })
    }

    pub fn dim(&self) -> usize {
        (self.l_max - self.l_min + 1) as usize
    }

    pub fn contains(&self, l: i32) -> bool {
        (self.l_min..=self.l_max).contains(&l)
    }

    pub fn index(&self, l: i32) -> Option<usize> {
        self.contains(l).then(|| (l - self.l_min) as usize)
    }

    pub fn values(&self) -> impl Iterator<Item = i32> {
        self.l_min..=self.l_max
    }

    /// Whether a forward-then-reverse plate of charge `q` starting from `l = 0`
    /// stays inside the window.
    pub fn closed_for_pipeline(&self, q: f64) -> bool {
        let s = (2.0 * q).round().abs() as i32;
        self.l_min <= -2 * s && self.l_max >= 2 * s
    }
}

/// Single-photon `pol ⊗ OAM` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ModeSpace {
    pub oam: OamSpace,
}

impl ModeSpace {
    pub fn new(oam: OamSpace) -> Self {
        Self { oam }
    }

    pub fn dim(&self) -> usize {
        2 * self.oam.dim()
    }

    /// `|pol> ⊗ |l>` for a polarization qubit given in `{H, V}`.
    pub fn ket(&self, pol: &StateVector, l: i32) -> Result<StateVector> {
        if pol.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: pol.dim() });
        }
        let idx = self.oam.index(l).ok_or(Error::InvalidOamSpace { l_min: l, l_max: l })?;
        let n = self.oam.dim();
        let mut amps = CVector::zeros(self.dim());
        amps[idx] = pol.amplitudes()[0];
        amps[n + idx] = pol.amplitudes()[1];
        StateVector::new(amps)
    }

    pub fn circular_ket(&self, pol: Circular, l: i32) -> Result<StateVector> {
        let p = match pol {
            Circular::L => ket_l(),
            Circular::R => ket_r(),
        };
        self.ket(&p, l)
    }

    /// Change of basis from `{L, R} ⊗ OAM` to the stored `{H, V} ⊗ OAM`.
    fn circular_basis(&self) -> CMatrix {
        circular_to_hv().kronecker(&CMatrix::identity(self.oam.dim(), self.oam.dim()))
    }

    fn circular_index(&self, pol: Circular, l: i32) -> Option<usize> {
        let n = self.oam.dim();
        let p = match pol {
            Circular::L => 0,
            Circular::R => 1,
        };
        self.oam.index(l).map(|i| p * n + i)
    }

    /// Amplitude of each `(circular polarization, l)` component.
    fn circular_amplitudes(&self, psi: &StateVector) -> CVector {
        self.circular_basis().adjoint() * psi.amplitudes()
    }

    /// Projector onto `pol ⊗ |l = 0>`.
    pub fn zero_oam_projector(&self) -> CMatrix {
        let mut p = CMatrix::zeros(self.oam.dim(), self.oam.dim());
        let i = self.oam.index(0).expect("window contains l=0");
        p[(i, i)] = c(1.0, 0.0);
        CMatrix::identity(2, 2).kronecker(&p)
    }

    /// Embedding of a bare polarization qubit at `l = 0`, a `dim × 2` isometry.
    pub fn zero_oam_embedding(&self) -> CMatrix {
        let mut e = CMatrix::zeros(self.oam.dim(), 1);
        e[(self.oam.index(0).expect("window contains l=0"), 0)] = c(1.0, 0.0);
        CMatrix::identity(2, 2).kronecker(&e)
    }
}

/// Geometric-phase mode converter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QPlate {
    /// Topological charge; `2q` must be an integer.
    pub q: f64,
    /// Optic-axis offset angle α (radians).
    pub phase_offset: f64,
    /// Optical retardation δ; `π` is a perfectly tuned plate.
    pub retardation: f64,
}

impl QPlate {
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() || ((2.0 * q) - (2.0 * q).round()).abs() > 1e-12 || q == 0.0 {
            return Err(Error::InvalidCharge(q));
        }
        Ok(Self { q, phase_offset: 0.0, retardation: std::f64::consts::PI })
    }

    /// The `q = 1/2` plate that converts polarization into vector vortex qubits.
    pub fn half() -> Self {
        Self::new(0.5).expect("valid charge")
    }

    pub fn with_phase_offset(mut self, alpha: f64) -> Self {
        self.phase_offset = alpha;
        self
    }

    /// Detuned plate; `retardation = π` is ideal.
    pub fn with_retardation(mut self, delta: f64) -> Self {
        self.retardation = delta;
        self
    }

    pub fn oam_shift(&self) -> i32 {
        (2.0 * self.q).round() as i32
    }

    /// OAM value after conversion of circular component `pol` at `l`.
    fn target(&self, pol: Circular, l: i32) -> (Circular, i32) {
        match pol {
            Circular::L => (Circular::R, l + self.oam_shift()),
            Circular::R => (Circular::L, l - self.oam_shift()),
        }
    }

    /// Matrix of the plate on `space`. Components whose converted partner
    /// falls outside the OAM window are dropped, so the operator is unitary
    /// only on [`QPlate::closed_subspace`].
    pub fn operator(&self, space: &ModeSpace) -> ModeOperator {
        let dim = space.dim();
        let half = self.retardation / 2.0;
        let stay = c(0.0, -half.cos());
        let convert = half.sin();
        let alpha = 2.0 * self.phase_offset;
        let mut circ = CMatrix::zeros(dim, dim);
        for pol in [Circular::L, Circular::R] {
            for l in space.oam.values() {
                let col = space.circular_index(pol, l).expect("in range");
                circ[(col, col)] = stay;
                let (tp, tl) = self.target(pol, l);
                if let Some(row) = space.circular_index(tp, tl) {
                    let phase = C64::from_polar(convert, if pol == Circular::L { alpha } else { -alpha });
                    circ[(row, col)] = phase;
                }
            }
        }
        let u = space.circular_basis();
        let m = &u * circ * u.adjoint();
        ModeOperator::new(m, OperatorKind::General).expect("general operators are unchecked")
    }

    /// Projector onto basis states whose converted partner stays in the window.
    pub fn closed_subspace(&self, space: &ModeSpace) -> CMatrix {
        let mut diag = CVector::zeros(space.dim());
        for pol in [Circular::L, Circular::R] {
            for l in space.oam.values() {
                let (_, tl) = self.target(pol, l);
                if space.oam.contains(tl) {
                    diag[space.circular_index(pol, l).expect("in range")] = c(1.0, 0.0);
                }
            }
        }
        let u = space.circular_basis();
        &u * CMatrix::from_diagonal(&diag) * u.adjoint()
    }

    /// Applies the plate, failing if any populated component would leave the window.
    pub fn apply(&self, space: &ModeSpace, psi: &StateVector) -> Result<StateVector> {
        if psi.dim() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: psi.dim() });
        }
        let amps = space.circular_amplitudes(psi);
        for pol in [Circular::L, Circular::R] {
            for l in space.oam.values() {
                let idx = space.circular_index(pol, l).expect("in range");
                let (_, tl) = self.target(pol, l);
                if amps[idx].norm() > POPULATION_TOL && !space.oam.contains(tl) {
                    return Err(Error::NonClosure { l });
                }
            }
        }
        StateVector::normalized(self.operator(space).apply(psi)?)
    }
}

/// Rotation of Bob's apparatus by `theta` radians about the beam axis.
pub fn rotation_operator(theta: f64, space: &ModeSpace) -> ModeOperator {
    let mut diag = CVector::zeros(space.dim());
    for pol in [Circular::L, Circular::R] {
        for l in space.oam.values() {
            let j = (pol.helicity() + l) as f64;
            diag[space.circular_index(pol, l).expect("in range")] = C64::from_polar(1.0, -j * theta);
        }
    }
    let u = space.circular_basis();
    let m = &u * CMatrix::from_diagonal(&diag) * u.adjoint();
    ModeOperator::new(m, OperatorKind::Unitary).expect("diagonal phases are unitary")
}

/// The zero-total-angular-momentum logical qubit `|0> = |L, −1>`, `|1> = |R, +1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalVortexQubit {
    pub zero_ket: StateVector,
    pub one_ket: StateVector,
}

impl LogicalVortexQubit {
    pub fn new(space: &ModeSpace) -> Result<Self> {
        Ok(Self {
            zero_ket: space.circular_ket(Circular::L, -1)?,
            one_ket: space.circular_ket(Circular::R, 1)?,
        })
    }

    pub fn projector(&self) -> CMatrix {
        self.zero_ket.projector() + self.one_ket.projector()
    }
}

/// Converts a polarization qubit at `l = 0` into a vector vortex qubit with
/// an ideal `q = 1/2` plate.
pub fn encode_to_vortex(space: &ModeSpace, pol_qubit: &StateVector) -> Result<StateVector> {
    if pol_qubit.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: pol_qubit.dim() });
    }
    let p0 = space.zero_oam_projector();
    let a = pol_qubit.amplitudes();
    let outside = (a - &p0 * a).norm_squared();
    if outside > POPULATION_TOL {
        return Err(Error::NotConfinedToZeroOam(outside));
    }
    QPlate::half().apply(space, pol_qubit)
}

/// Bob's receiver: encoding choice, mode window and the plates used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub encoding: Encoding,
    pub space: ModeSpace,
    /// Plate converting Bob's photon at the source.
    pub encoder: QPlate,
    /// Plate inside Bob's rotating analyzer.
    pub decoder: QPlate,
}

impl Receiver {
    pub fn new(encoding: Encoding) -> Self {
        Self { encoding, space: ModeSpace::default(), encoder: QPlate::half(), decoder: QPlate::half() }
    }

    pub fn with_plates(mut self, encoder: QPlate, decoder: QPlate) -> Self {
        self.encoder = encoder;
        self.decoder = decoder;
        self
    }

    pub fn with_space(mut self, space: ModeSpace) -> Result<Self> {
        if !space.oam.closed_for_pipeline(self.decoder.q) {
            return Err(Error::InvalidOamSpace { l_min: space.oam.l_min, l_max: space.oam.l_max });
        }
        self.space = space;
        Ok(self)
    }

    /// Dimension of Bob's photon space.
    pub fn bob_dim(&self) -> usize {
        match self.encoding {
            Encoding::Polarization => 2,
            Encoding::Vortex => self.space.dim(),
        }
    }

    /// Map from Bob's photon space to the polarization qubit Bob's detectors see
    /// at orientation `theta` (a `2 × bob_dim` matrix).
    pub fn readout_map(&self, theta: f64) -> CMatrix {
        match self.encoding {
            Encoding::Polarization => polarization_rotation(theta).adjoint(),
            Encoding::Vortex => {
                let rot = rotation_operator(theta, &self.space);
                let qp = self.decoder.operator(&self.space);
                self.space.zero_oam_embedding().adjoint() * qp.matrix() * rot.matrix().adjoint()
            }
        }
    }

    /// Projector for Bob's outcome `±1` along `direction` at orientation `theta`.
    pub fn analyzer(&self, direction: &BlochVector, theta: f64, outcome: i8) -> ModeOperator {
        let a = self.readout_map(theta);
        let m = a.adjoint() * polarization_projector(direction, outcome) * &a;
        ModeOperator::new(m, OperatorKind::Projector).expect("conjugated projector")
    }

    /// Projector onto Bob states that never reach the detectors (OAM `l ≠ 0`
    /// after reverse conversion).
    pub fn null_projector(&self, theta: f64) -> ModeOperator {
        let a = self.readout_map(theta);
        let dim = self.bob_dim();
        let m = CMatrix::identity(dim, dim) - a.adjoint() * a;
        ModeOperator::new(m, OperatorKind::Projector).expect("complement of a projector")
    }

    /// Isometry from Bob's source polarization qubit to his transmitted photon.
    pub fn source_map(&self) -> CMatrix {
        match self.encoding {
            Encoding::Polarization => CMatrix::identity(2, 2),
            Encoding::Vortex => self.encoder.operator(&self.space).matrix() * self.space.zero_oam_embedding(),
        }
    }

    /// Distributes a two-photon polarization state: Alice's photon untouched,
    /// Bob's photon converted per the encoding.
    pub fn distribute(&self, rho_pol: &DensityMatrix) -> Result<DensityMatrix> {
        if rho_pol.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: rho_pol.dim() });
        }
        let e = CMatrix::identity(2, 2).kronecker(&self.source_map());
        DensityMatrix::from_unnormalized(rho_pol.conjugated_by(&e))
    }

    /// Ideal shared state: the polarization singlet, distributed.
    pub fn target_state(&self) -> StateVector {
        let e = CMatrix::identity(2, 2).kronecker(&self.source_map());
        StateVector::normalized(e * singlet_polarization().amplitudes()).expect("isometry")
    }

    /// Two-qubit polarization state seen by Alice and by Bob's detectors at
    /// orientation `theta`, conditioned on Bob's photon reaching them.
    pub fn detected_state(&self, rho: &DensityMatrix, theta: f64) -> Result<DensityMatrix> {
        let expected = 2 * self.bob_dim();
        if rho.dim() != expected {
            return Err(Error::DimensionMismatch { expected, found: rho.dim() });
        }
        let a = CMatrix::identity(2, 2).kronecker(&self.readout_map(theta));
        let m = &a * rho.matrix() * a.adjoint();
        DensityMatrix::from_unnormalized(m)
    }
}

/// `|Ψ⁻_p> = (|H>|V> − |V>|H>)/√2`, Alice's photon first.
pub fn singlet_polarization() -> StateVector {
    let s = FRAC_1_SQRT_2;
    StateVector::new(CVector::from_column_slice(&[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]))
        .expect("normalized")
}

/// `v |Ψ⁻_p><Ψ⁻_p| + (1 − v) I/4`.
pub fn werner(v: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("Werner visibility {v} outside [0, 1]")));
    }
    DensityMatrix::mixture(&[(v, &singlet_polarization().to_density()), (1.0 - v, &DensityMatrix::maximally_mixed(4))])
}

/// Visibility giving singlet fidelity `f` for a Werner state.
pub fn werner_visibility_for_fidelity(f: f64) -> Result<f64> {
    if !(0.25..=1.0).contains(&f) {
        return Err(Error::InvalidParameter(format!("Werner fidelity {f} outside [1/4, 1]")));
    }
    Ok((4.0 * f - 1.0) / 3.0)
}

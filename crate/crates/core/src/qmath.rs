//! Small dense complex linear algebra for the simulator.
//!
//! Everything here is exact, finite-dimensional and immutable once built.
//! Composite spaces use the Kronecker convention with the first factor as the
//! most significant index, so `tensor(|a>, |b>)` stores amplitude `a_i b_j` at
//! `i * dim_b + j`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance on state norms and on density-matrix Hermiticity and trace.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance on eigenvalue positivity and on operator identities.
pub const OPERATOR_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise deviation of `m` from its adjoint.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Real eigenvalues of the Hermitized matrix `(m + m†)/2`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let mut vals: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// Pure state on a finite Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: CVector,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amps: CVector) -> Result<Self> {
        let n2 = amps.norm_squared();
        if amps.is_empty() || (n2 - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amps })
    }

    pub fn normalized(amps: CVector) -> Result<Self> {
        let n = amps.norm();
        if amps.is_empty() || n < 1e-300 {
            return Err(Error::NotNormalized(n * n));
        }
        Ok(Self { amps: amps / c(n, 0.0) })
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::normalized(CVector::from_column_slice(amps))
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amps = CVector::zeros(dim);
        amps[index] = c(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { m: self.projector() }
    }
}

/// Mixed state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let dev = hermitian_deviation(&m);
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::BadTrace(tr.re));
        }
        let min = hermitian_eigenvalues(&m)[0];
        if min < -OPERATOR_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { m })
    }

    /// Builds a state from a matrix that is known to be physical up to rounding;
    /// the matrix is Hermitized and renormalized before validation.
    pub fn from_unnormalized(m: CMatrix) -> Result<Self> {
        let h = (&m + m.adjoint()) * c(0.5, 0.0);
        let tr = h.trace().re;
        if tr <= 0.0 {
            return Err(Error::BadTrace(tr));
        }
        Self::new(h / c(tr, 0.0))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { m: CMatrix::identity(dim, dim) / c(dim as f64, 0.0) }
    }

    /// Convex combination `Σ w_i ρ_i`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidParameter("empty mixture".into()));
        };
        let dim = first.dim();
        let mut total = 0.0;
        let mut m = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            check_dim(dim, rho.dim())?;
            if *w < 0.0 {
                return Err(Error::InvalidParameter(format!("negative mixture weight {w}")));
            }
            total += w;
            m += rho.matrix() * c(*w, 0.0);
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.m)
    }

    /// `U ρ U†` for an operator mapping this space into a space of the same
    /// dimension. Returns the unnormalized matrix; use for unitaries or to get
    /// post-measurement weights.
    pub fn conjugated_by(&self, op: &CMatrix) -> CMatrix {
        op * &self.m * op.adjoint()
    }
}

/// What a [`ModeOperator`] is known to be; checked on construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Unitary,
    Hermitian,
    Projector,
    /// No algebraic property asserted (e.g. a truncated q-plate on a finite OAM window).
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    m: CMatrix,
    kind: OperatorKind,
}

impl ModeOperator {
    pub fn new(m: CMatrix, kind: OperatorKind) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let dim = m.nrows();
        match kind {
            OperatorKind::Unitary => {
                let dev = max_abs(&(m.adjoint() * &m - CMatrix::identity(dim, dim)));
                if dev > OPERATOR_TOL {
                    return Err(Error::NotUnitary(dev));
                }
            }
            OperatorKind::Hermitian => {
                let dev = hermitian_deviation(&m);
                if dev > OPERATOR_TOL {
                    return Err(Error::NotHermitian(dev));
                }
            }
            OperatorKind::Projector => {
                let dev = max_abs(&(&m * &m - &m)).max(hermitian_deviation(&m));
                if dev > OPERATOR_TOL {
                    return Err(Error::NotProjector(dev));
                }
            }
            OperatorKind::General => {}
        }
        Ok(Self { m, kind })
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: CMatrix::identity(dim, dim), kind: OperatorKind::Unitary }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn is_hermitian(&self) -> bool {
        matches!(self.kind, OperatorKind::Hermitian | OperatorKind::Projector)
            || hermitian_deviation(&self.m) <= OPERATOR_TOL
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint(), kind: self.kind }
    }

    /// Operator product `self · rhs` (rhs acts first).
    pub fn then_after(&self, rhs: &ModeOperator) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        let kind = if self.kind == OperatorKind::Unitary && rhs.kind == OperatorKind::Unitary {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Ok(Self { m: &self.m * &rhs.m, kind })
    }

    /// Raw image `O|ψ>`, not renormalized.
    pub fn apply(&self, psi: &StateVector) -> Result<CVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(&self.m * psi.amplitudes())
    }

    /// Applies a unitary and returns the resulting state.
    pub fn apply_unitary(&self, psi: &StateVector) -> Result<StateVector> {
        StateVector::new(self.apply(psi)?)
    }
}

/// Unit-length Bloch direction (or a general Bloch vector for mixed qubits).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const X: BlochVector = BlochVector { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: BlochVector = BlochVector { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: BlochVector = BlochVector { x: 0.0, y: 0.0, z: 1.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Unit direction; fails for a vector too short to normalize.
    pub fn unit(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if n < 1e-12 {
            return Err(Error::InvalidParameter("zero Bloch vector".into()));
        }
        Ok(Self { x: x / n, y: y / n, z: z / n })
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= STATE_TOL
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { x: self.x * s, y: self.y * s, z: self.z * s }
    }

    pub fn add(&self, other: &BlochVector) -> Self {
        Self { x: self.x + other.x, y: self.y + other.y, z: self.z + other.z }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// `u·σ` in the computational basis.
    pub fn pauli_matrix(&self) -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[c(self.z, 0.0), c(self.x, -self.y), c(self.x, self.y), c(-self.z, 0.0)],
        )
    }
}

pub fn pauli_x() -> CMatrix {
    BlochVector::X.pauli_matrix()
}

pub fn pauli_y() -> CMatrix {
    BlochVector::Y.pauli_matrix()
}

pub fn pauli_z() -> CMatrix {
    BlochVector::Z.pauli_matrix()
}

/// Kronecker product with first-factor-major ordering.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Self {
        Self { amps: self.amps.kronecker(&other.amps) }
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }
}

impl Tensor for ModeOperator {
    fn tensor(&self, other: &Self) -> Self {
        use OperatorKind::*;
        let kind = match (self.kind, other.kind) {
            (Unitary, Unitary) => Unitary,
            (Projector, Projector) => Projector,
            (Hermitian | Projector, Hermitian | Projector) => Hermitian,
            _ => General,
        };
        Self { m: self.m.kronecker(&other.m), kind }
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Reduced state of factor `keep` of a composite with factor dimensions `dims`.
pub fn partial_trace(rho: &DensityMatrix, keep: usize, dims: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    check_dim(rho.dim(), total)?;
    if keep >= dims.len() {
        return Err(Error::InvalidParameter(format!("subsystem {keep} out of {}", dims.len())));
    }
    let d_keep = dims[keep];
    // Strides of the kept factor and of the traced remainder.
    let inner: usize = dims[keep + 1..].iter().product();
    let outer: usize = dims[..keep].iter().product();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(d_keep, d_keep);
    for i in 0..d_keep {
        for j in 0..d_keep {
            let mut acc = c(0.0, 0.0);
            for o in 0..outer {
                for r in 0..inner {
                    let row = (o * d_keep + i) * inner + r;
                    let col = (o * d_keep + j) * inner + r;
                    acc += m[(row, col)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    DensityMatrix::from_unnormalized(out)
}

/// `<ψ|ρ|ψ>`.
pub fn fidelity_pure(psi: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    check_dim(psi.dim(), rho.dim())?;
    let a = psi.amplitudes();
    let v = (a.adjoint() * rho.matrix() * a)[(0, 0)];
    if v.im.abs() > STATE_TOL {
        return Err(Error::NotHermitian(v.im.abs()));
    }
    Ok(v.re.clamp(0.0, 1.0))
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρρ) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr(ρ O)` for a Hermitian observable.
pub fn expectation(rho: &DensityMatrix, obs: &ModeOperator) -> Result<f64> {
    check_dim(rho.dim(), obs.dim())?;
    if !obs.is_hermitian() {
        return Err(Error::NotHermitian(hermitian_deviation(obs.matrix())));
    }
    let v = (rho.matrix() * obs.matrix()).trace();
    if v.im.abs() > OPERATOR_TOL {
        return Err(Error::NotHermitian(v.im.abs()));
    }
    Ok(v.re)
}

/// Trace distance `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let d = a.matrix() - b.matrix();
    Ok(0.5 * hermitian_eigenvalues(&d).iter().map(|l| l.abs()).sum::<f64>())
}

//! Simulation and verification of loss-tolerant EPR steering with
//! rotation-invariant vector vortex qubits.
//!
//! * [`qmath`]: dense complex states and operators.
//! * [`encoding`]: polarization/OAM spaces, q-plates, rotations, Bob's analyzer.
//! * [`steering`]: measurement sets and the steering parameter.
//! * [`bounds`]: loss-dependent local-hidden-state bounds and a brute-force oracle.
//! * [`experiment`]: seeded finite-statistics steering runs.
//! * [`tomography`]: simulated two-qubit state tomography.

pub mod bounds;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod qmath;
pub mod steering;
pub mod tomography;

pub use error::{Error, Result};

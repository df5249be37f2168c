//! Geometric-phase engineering for binomial-code logical gates.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: truncated Fock-space states and operators, binomial codewords.
//! * [`hamiltonian`]: dispersive multi-mode Hamiltonians built from a [`hamiltonian::SystemSpec`],
//!   plus the photon-number block decomposition used by the CZ optimisation.
//! * [`dynamics`]: piecewise-constant propagation and Lindblad evolution.
//! * [`grape`]: constraint sets, exact-gradient GRAPE, and the selective-pulse baseline.
//! * [`tomography`]: Pauli transfer matrices, Wigner functions, readout correction, MLE.
//! * [`pipeline`]: end-to-end experiments (QPT, Bell preparation, error budget, baseline sweep).
//!
//! Units: internally every rate is an angular frequency in rad/s and every time is in seconds.
//! Files and configs use linear MHz/GHz, ns and μs; [`units`] is the only place that converts.

pub mod dynamics;
pub mod error;
pub mod grape;
pub mod hamiltonian;
pub mod hilbert;
pub mod linalg;
pub mod optim;
pub mod pipeline;
pub mod tomography;
pub mod units;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};

//! Photon-number block decomposition of a cavity–coupler–cavity system.
//!
//! With only the coupler driven, cavity photon numbers are conserved and the dynamics split into
//! one driven two-level problem per sector `(n_a, n_b)`:
//!
//! ```text
//! H(n_a, n_b) = diag(φ̇, φ̇ + Δ) + ε_I σ_x + ε_Q σ_y
//! Δ = −χ_a n_a − χ_b n_b
//! φ̇ = −(K_a/2) n_a(n_a−1) − (K_b/2) n_b(n_b−1) − χ_ab n_a n_b
//! ```
//!
//! Block vectors are sector-major: index `2·sector + q` with `q ∈ {g, e}`.

use super::{ModeKind, SystemSpec};
use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::linalg::{CMatrix, CVector, C64, I, ZERO};

/// Photon numbers spanned by the binomial codewords.
pub const SECTOR_PHOTONS: [usize; 3] = [0, 2, 4];

#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub photons: (usize, usize),
    /// Coupler transition shift when excited (rad/s).
    pub detuning: f64,
    /// Coupler-independent phase rate of the sector (rad/s).
    pub phase_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub cavities: (String, String),
    pub coupler: String,
    /// Full-space cavity truncations, used when mapping states in and out.
    pub cavity_dims: (usize, usize),
    pub sectors: Vec<Sector>,
}

impl BlockSystem {
    pub fn dim(&self) -> usize {
        2 * self.sectors.len()
    }

    pub fn sector_index(&self, photons: (usize, usize)) -> Option<usize> {
        self.sectors.iter().position(|s| s.photons == photons)
    }

    pub fn sector(&self, photons: (usize, usize)) -> Option<&Sector> {
        self.sectors.iter().find(|s| s.photons == photons)
    }

    /// Static 2×2 block of a sector.
    pub fn static_block(&self, idx: usize) -> CMatrix {
        let s = &self.sectors[idx];
        CMatrix::from_row_slice(2, 2, &[C64::from(s.phase_rate), ZERO, ZERO, C64::from(s.phase_rate + s.detuning)])
    }

    /// `(σ_x, σ_y)` within one block.
    pub fn control_blocks() -> [CMatrix; 2] {
        let one = C64::from(1.0);
        [
            CMatrix::from_row_slice(2, 2, &[ZERO, one, one, ZERO]),
            CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        ]
    }

    fn full_index(&self, na: usize, q: usize, nb: usize) -> usize {
        (na * 2 + q) * self.cavity_dims.1 + nb
    }

    /// Restrict a full `cavity ⊗ coupler ⊗ cavity` state to the block basis.
    /// Fails when the state has weight outside the `{0,2,4}²` sectors.
    pub fn restrict(&self, state: &StateVector) -> Result<CVector> {
        let (da, db) = self.cavity_dims;
        if state.dims() != [da, 2, db] {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?} vs block system [{da}, 2, {db}]",
                state.dims()
            )));
        }
        let amps = state.amplitudes();
        let mut v = CVector::zeros(self.dim());
        for (k, s) in self.sectors.iter().enumerate() {
            for q in 0..2 {
                v[2 * k + q] = amps[self.full_index(s.photons.0, q, s.photons.1)];
            }
        }
        let leaked = (amps.norm_squared() - v.norm_squared()).max(0.0);
        if leaked > 1e-12 {
            return Err(Error::DimensionMismatch(format!("state has weight {leaked:e} outside the block sectors")));
        }
        Ok(v)
    }

    /// Inverse of [`BlockSystem::restrict`].
    pub fn expand(&self, v: &CVector) -> Result<StateVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!("block vector of length {} vs {}", v.len(), self.dim())));
        }
        let (da, db) = self.cavity_dims;
        let mut amps = CVector::zeros(da * 2 * db);
        for (k, s) in self.sectors.iter().enumerate() {
            for q in 0..2 {
                amps[self.full_index(s.photons.0, q, s.photons.1)] = v[2 * k + q];
            }
        }
        StateVector::new(vec![da, 2, db], amps)
    }
}

/// Decompose a three-mode `cavity ⊗ qubit ⊗ cavity` system driven only on the qubit.
pub fn block_decompose(system: &SystemSpec) -> Result<BlockSystem> {
    let kinds: Vec<ModeKind> = system.modes.iter().map(|m| m.kind).collect();
    if kinds != [ModeKind::Cavity, ModeKind::Qubit, ModeKind::Cavity] {
        return Err(Error::DecompositionInvalid("expected modes ordered cavity, qubit, cavity".into()));
    }
    let (a, q, b) = (&system.modes[0], &system.modes[1], &system.modes[2]);
    if system.drive_targets.iter().any(|t| *t != q.label) || system.drive_targets.is_empty() {
        return Err(Error::DecompositionInvalid(format!(
            "drives {:?} break photon-number conservation; only `{}` may be driven",
            system.drive_targets, q.label
        )));
    }
    if a.dim <= 4 || b.dim <= 4 {
        return Err(Error::TruncationTooSmall("block sectors need cavity dims >= 5".into()));
    }
    let chi_a = system.chi(&a.label, &q.label);
    let chi_b = system.chi(&b.label, &q.label);
    let chi_ab = system.chi(&a.label, &b.label);
    let mut sectors = Vec::with_capacity(9);
    for &na in &SECTOR_PHOTONS {
        for &nb in &SECTOR_PHOTONS {
            let (fa, fb) = (na as f64, nb as f64);
            sectors.push(Sector {
                photons: (na, nb),
                detuning: -chi_a * fa - chi_b * fb,
                phase_rate: -0.5 * a.self_kerr * fa * (fa - 1.0) - 0.5 * b.self_kerr * fb * (fb - 1.0) - chi_ab * fa * fb,
            });
        }
    }
    Ok(BlockSystem {
        cavities: (a.label.clone(), b.label.clone()),
        coupler: q.label.clone(),
        cavity_dims: (a.dim, b.dim),
        sectors,
    })
}

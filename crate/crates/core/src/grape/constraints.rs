//! State-transfer constraint families and the ideal logical operations behind them.
//!
//! Mode orders: CZ and Hadamard act on `S1 ⊗ QC ⊗ S2`; encode and decode on `Q1 ⊗ S1 ⊗ S2 ⊗ Q2`;
//! the single-cavity encode on `Q ⊗ S`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{fock_state, logical_state, qubit_state, LogicalLabel, Operator, StateVector};
use crate::linalg::{complete_unitary, CMatrix, CVector, C64};

#[derive(Debug, Clone)]
pub struct ConstraintPair {
    pub initial: StateVector,
    pub target: StateVector,
    pub weight: f64,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Encode,
    Decode,
    Cz,
    Hadamard,
    Custom,
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub kind: ConstraintKind,
    pub pairs: Vec<ConstraintPair>,
}

impl ConstraintSet {
    pub fn new(kind: ConstraintKind, pairs: Vec<ConstraintPair>) -> Result<Self> {
        let first = pairs.first().ok_or_else(|| Error::Missing("empty constraint set".into()))?;
        let dims = first.initial.dims().to_vec();
        for p in &pairs {
            if p.initial.dims() != dims.as_slice() || p.target.dims() != dims.as_slice() {
                return Err(Error::DimensionMismatch(format!("constraint `{}` has mismatched dims", p.label)));
            }
            for s in [&p.initial, &p.target] {
                if (s.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::NonOrthonormal(format!("constraint `{}` state is not normalised", p.label)));
                }
            }
            if !(p.weight > 0.0) {
                return Err(Error::InvalidDimension(format!("constraint `{}` needs a positive weight", p.label)));
            }
        }
        Ok(Self { kind, pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        self.pairs[0].initial.dims()
    }

    /// Replace every target by `m · target`.
    pub fn map_targets(&self, m: &CMatrix) -> Result<Self> {
        let pairs = self
            .pairs
            .iter()
            .map(|p| {
                Ok(ConstraintPair {
                    target: StateVector::new(p.target.dims().to_vec(), m * p.target.amplitudes())?,
                    ..p.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind: self.kind, pairs })
    }
}

/// Logical labels used by the CZ and Hadamard constraints.
pub const CZ_LABELS: [LogicalLabel; 4] = [LogicalLabel::G, LogicalLabel::E, LogicalLabel::Plus, LogicalLabel::MinusI];

fn check_cz_dims(dims: &[usize]) -> Result<(usize, usize)> {
    if dims.len() != 3 || dims[1] != 2 {
        return Err(Error::DimensionMismatch(format!("expected [cavity, 2, cavity] dims, got {dims:?}")));
    }
    if dims[0] < 5 || dims[2] < 5 {
        return Err(Error::TruncationTooSmall(format!("cavity dims {dims:?} must be >= 5")));
    }
    Ok((dims[0], dims[2]))
}

fn check_encode_dims(dims: &[usize]) -> Result<(usize, usize)> {
    if dims.len() != 4 || dims[0] != 2 || dims[3] != 2 {
        return Err(Error::DimensionMismatch(format!("expected [2, cavity, cavity, 2] dims, got {dims:?}")));
    }
    if dims[1] < 5 || dims[2] < 5 {
        return Err(Error::TruncationTooSmall(format!("cavity dims {dims:?} must be >= 5")));
    }
    Ok((dims[1], dims[2]))
}

/// Ideal CZ on `S1 ⊗ QC ⊗ S2`: −1 on every basis state with two photons in each cavity.
pub fn ideal_cz(dims: &[usize]) -> Result<Operator> {
    let (da, db) = check_cz_dims(dims)?;
    let diag = CVector::from_fn(da * 2 * db, |i, _| {
        let (na, nb) = (i / (2 * db), i % db);
        C64::from(if na == 2 && nb == 2 { -1.0 } else { 1.0 })
    });
    Operator::new(dims.to_vec(), CMatrix::from_diagonal(&diag))
}

/// `R_y(π/2)` on the codeword subspace of one cavity, identity on its complement.
pub fn logical_ry_half_pi(dim: usize) -> Result<CMatrix> {
    let [zero, one] = crate::hilbert::codewords(dim)?;
    let (z, o) = (zero.amplitudes(), one.amplitudes());
    let h = C64::from(FRAC_1_SQRT_2);
    // |0_L⟩ → (|0_L⟩ + |1_L⟩)/√2, |1_L⟩ → (−|0_L⟩ + |1_L⟩)/√2
    let mut m = CMatrix::identity(dim, dim) - z * z.adjoint() - o * o.adjoint();
    m += (z * h + o * h) * z.adjoint();
    m += (o * h - z * h) * o.adjoint();
    Ok(m)
}

/// Logical Hadamard-type gate used for the Bell preparation: `R_y(π/2)` on `S2`.
pub fn ideal_hadamard(dims: &[usize]) -> Result<Operator> {
    let (da, db) = check_cz_dims(dims)?;
    let m = CMatrix::identity(da * 2, da * 2).kronecker(&logical_ry_half_pi(db)?);
    Operator::new(dims.to_vec(), m)
}

/// Unitary on `Q1 ⊗ S1 ⊗ S2 ⊗ Q2` mapping `|m, 0, 0, n⟩ → |g, m_L, n_L, g⟩` for `m, n ∈ {g, e}`.
pub fn ideal_encode(dims: &[usize]) -> Result<Operator> {
    let (d1, d2) = check_encode_dims(dims)?;
    let g = qubit_state(LogicalLabel::G);
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for m in [LogicalLabel::G, LogicalLabel::E] {
        for n in [LogicalLabel::G, LogicalLabel::E] {
            let vac = |d| fock_state(d, 0);
            inputs.push(StateVector::tensor_all(&[qubit_state(m), vac(d1)?, vac(d2)?, qubit_state(n)]).into_amplitudes());
            outputs.push(
                StateVector::tensor_all(&[g.clone(), logical_state(m, d1)?, logical_state(n, d2)?, g.clone()])
                    .into_amplitudes(),
            );
        }
    }
    Operator::new(dims.to_vec(), complete_unitary(&inputs, &outputs)?)
}

/// CZ constraints: `|m_L, g, n_L⟩ → U_CZ |m_L, g, n_L⟩` for `m, n ∈ {g, e, +, −i}`.
pub fn cz_constraints(dims: &[usize]) -> Result<ConstraintSet> {
    let (da, db) = check_cz_dims(dims)?;
    let cz = ideal_cz(dims)?;
    let mut pairs = Vec::with_capacity(16);
    for m in CZ_LABELS {
        for n in CZ_LABELS {
            let initial = StateVector::tensor_all(&[
                logical_state(m, da)?,
                qubit_state(LogicalLabel::G),
                logical_state(n, db)?,
            ]);
            let target = cz.apply(&initial)?;
            pairs.push(ConstraintPair { initial, target, weight: 1.0, label: format!("{m},{n}") });
        }
    }
    ConstraintSet::new(ConstraintKind::Cz, pairs)
}

/// Hadamard constraints: `R_y(π/2)` on the `S2` label (`g→+`, `e→−`, `+→e`, `−i→−i` up to the
/// phases the rotation assigns), plus the Bell-state pair with weight `bell_weight`.
pub fn hadamard_constraints(dims: &[usize], bell_weight: f64) -> Result<ConstraintSet> {
    let (da, db) = check_cz_dims(dims)?;
    let h = ideal_hadamard(dims)?;
    let g = qubit_state(LogicalLabel::G);
    let mut pairs = Vec::with_capacity(17);
    for m in CZ_LABELS {
        for n in CZ_LABELS {
            let initial = StateVector::tensor_all(&[logical_state(m, da)?, g.clone(), logical_state(n, db)?]);
            let target = h.apply(&initial)?;
            pairs.push(ConstraintPair { initial, target, weight: 1.0, label: format!("{m},{n}") });
        }
    }
    let l = |a: usize, b: usize| -> Result<StateVector> {
        let ca = if a == 0 { LogicalLabel::G } else { LogicalLabel::E };
        let cb = if b == 0 { LogicalLabel::G } else { LogicalLabel::E };
        Ok(StateVector::tensor_all(&[logical_state(ca, da)?, g.clone(), logical_state(cb, db)?]))
    };
    let initial = l(0, 0)?.add(&l(0, 1)?)?.add(&l(1, 0)?)?.add(&l(1, 1)?.scaled(C64::from(-1.0)))?.normalized();
    let target = l(0, 1)?.add(&l(1, 0)?)?.normalized();
    pairs.push(ConstraintPair { initial, target, weight: bell_weight, label: "bell".into() });
    ConstraintSet::new(ConstraintKind::Hadamard, pairs)
}

fn encode_pairs(dims: &[usize], reverse: bool) -> Result<Vec<ConstraintPair>> {
    let (d1, d2) = check_encode_dims(dims)?;
    let g = qubit_state(LogicalLabel::G);
    let mut pairs = Vec::with_capacity(36);
    for m in LogicalLabel::ALL {
        for n in LogicalLabel::ALL {
            let qubits = StateVector::tensor_all(&[qubit_state(m), fock_state(d1, 0)?, fock_state(d2, 0)?, qubit_state(n)]);
            let cavities =
                StateVector::tensor_all(&[g.clone(), logical_state(m, d1)?, logical_state(n, d2)?, g.clone()]);
            let (initial, target) = if reverse { (cavities, qubits) } else { (qubits, cavities) };
            pairs.push(ConstraintPair { initial, target, weight: 1.0, label: format!("{m},{n}") });
        }
    }
    Ok(pairs)
}

/// Encode constraints: `|m, 0, 0, n⟩ → |g, m_L, n_L, g⟩` for all 36 label pairs.
pub fn encode_constraints(dims: &[usize]) -> Result<ConstraintSet> {
    ConstraintSet::new(ConstraintKind::Encode, encode_pairs(dims, false)?)
}

/// Decode constraints: the encode arrows reversed.
pub fn decode_constraints(dims: &[usize]) -> Result<ConstraintSet> {
    ConstraintSet::new(ConstraintKind::Decode, encode_pairs(dims, true)?)
}

/// Single-cavity encode on `Q ⊗ S`: `|m, 0⟩ → |g, m_L⟩` for the six labels.
pub fn encode_single_constraints(dims: &[usize]) -> Result<ConstraintSet> {
    if dims.len() != 2 || dims[0] != 2 {
        return Err(Error::DimensionMismatch(format!("expected [2, cavity] dims, got {dims:?}")));
    }
    if dims[1] < 5 {
        return Err(Error::TruncationTooSmall(format!("cavity dim {} must be >= 5", dims[1])));
    }
    let pairs = LogicalLabel::ALL
        .iter()
        .map(|&m| {
            Ok(ConstraintPair {
                initial: qubit_state(m).tensor(&fock_state(dims[1], 0)?),
                target: qubit_state(LogicalLabel::G).tensor(&logical_state(m, dims[1])?),
                weight: 1.0,
                label: m.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ConstraintSet::new(ConstraintKind::Encode, pairs)
}

/// Logical basis `|a_L⟩ ⊗ |g⟩ ⊗ |b_L⟩` of the CZ subsystem, ordered 00, 01, 10, 11.
pub fn cz_logical_basis(dims: &[usize]) -> Result<Vec<StateVector>> {
    let (da, db) = check_cz_dims(dims)?;
    let mut out = Vec::with_capacity(4);
    for a in [LogicalLabel::G, LogicalLabel::E] {
        for b in [LogicalLabel::G, LogicalLabel::E] {
            out.push(StateVector::tensor_all(&[logical_state(a, da)?, qubit_state(LogicalLabel::G), logical_state(b, db)?]));
        }
    }
    Ok(out)
}

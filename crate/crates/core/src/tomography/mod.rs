//! Process and state characterisation: Pauli transfer matrices, the process-fidelity metric,
//! Wigner functions, readout correction, maximum-likelihood reconstruction and post-selection.

mod mle;
mod readout;
mod wigner;

pub use mle::{mle_reconstruct, MeasurementSetting, MleOptions, MleResult};
pub use readout::{
    bayes_correct, emulate_outcomes, outcome_probabilities, parity_effects, BayesMatrix, Correction, ParitySetting,
    OUTCOMES,
};
pub use wigner::{wigner_joint, wigner_single, JointCut, WignerGrid};

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{self, StateVector};
use crate::linalg::{trace_product, CMatrix, CVector, C64, I, ONE, ZERO};

const PAULI_SYMBOLS: [char; 4] = ['I', 'X', 'Y', 'Z'];

fn pauli(k: usize) -> CMatrix {
    let m = |a, b, c, d| CMatrix::from_row_slice(2, 2, &[a, b, c, d]);
    match k {
        0 => m(ONE, ZERO, ZERO, ONE),
        1 => m(ZERO, ONE, ONE, ZERO),
        2 => m(ZERO, -I, I, ZERO),
        _ => m(ONE, ZERO, ZERO, -ONE),
    }
}

/// Two-qubit Paulis `σ_a ⊗ σ_b` in the order II, IX, IY, IZ, XI, …, ZZ.
pub fn two_qubit_paulis() -> Vec<CMatrix> {
    (0..16).map(|k| pauli(k / 4).kronecker(&pauli(k % 4))).collect()
}

pub fn pauli_labels() -> Vec<String> {
    (0..16).map(|k| format!("{}{}", PAULI_SYMBOLS[k / 4], PAULI_SYMBOLS[k % 4])).collect()
}

/// Real `d² × d²` process matrix `R_ij = Tr[P_i E(P_j)] / d` in the two-qubit Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTransferMatrix {
    d: usize,
    matrix: DMatrix<f64>,
}

impl PauliTransferMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if matrix.ncols() != n || d * d != n || d == 0 {
            return Err(Error::DimensionMismatch(format!("{}x{} is not a d²×d² matrix", n, matrix.ncols())));
        }
        Ok(Self { d, matrix })
    }

    pub fn identity() -> Self {
        Self { d: 4, matrix: DMatrix::identity(16, 16) }
    }

    /// PTM of the unitary `u` acting on the 4-dim logical space.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        if u.shape() != (4, 4) {
            return Err(Error::DimensionMismatch(format!("expected 4x4 unitary, got {:?}", u.shape())));
        }
        Ok(Self::from_logical_map(|p| u * p * u.adjoint()))
    }

    /// PTM of a linear map on 4×4 matrices.
    pub fn from_logical_map(mut map: impl FnMut(&CMatrix) -> CMatrix) -> Self {
        let paulis = two_qubit_paulis();
        let mut r = DMatrix::zeros(16, 16);
        for (j, pj) in paulis.iter().enumerate() {
            let out = map(pj);
            for (i, pi) in paulis.iter().enumerate() {
                r[(i, j)] = trace_product(pi, &out).re / 4.0;
            }
        }
        Self { d: 4, matrix: r }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Largest deviation of the first row from `(1, 0, …, 0)`.
    pub fn trace_preservation_defect(&self) -> f64 {
        (0..self.matrix.ncols())
            .map(|j| (self.matrix[(0, j)] - if j == 0 { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csv_string(&self) -> String {
        let labels = pauli_labels();
        let mut s = String::from("R");
        for l in &labels {
            let _ = write!(s, ",{l}");
        }
        s.push('\n');
        for (i, l) in labels.iter().enumerate() {
            s.push_str(l);
            for j in 0..16 {
                let _ = write!(s, ",{:.12e}", self.matrix[(i, j)]);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// `F = (Tr(R_ideal† R_exp) + d) / (d² + d)`.
pub fn process_fidelity(r_exp: &PauliTransferMatrix, r_ideal: &PauliTransferMatrix) -> Result<f64> {
    if r_exp.matrix.shape() != r_ideal.matrix.shape() {
        return Err(Error::DimensionMismatch(format!(
            "PTM shapes {:?} and {:?}",
            r_exp.matrix.shape(),
            r_ideal.matrix.shape()
        )));
    }
    let d = r_exp.d as f64;
    let tr = r_ideal.matrix.tr_mul(&r_exp.matrix).trace();
    Ok((tr + d) / (d * d + d))
}

/// Column matrix `B` whose columns are the logical basis vectors; checks orthonormality.
pub fn logical_isometry(basis: &[StateVector]) -> Result<CMatrix> {
    if basis.len() != 4 {
        return Err(Error::NonOrthonormal(format!("expected 4 basis states, got {}", basis.len())));
    }
    let dims = basis[0].dims();
    if basis.iter().any(|b| b.dims() != dims) {
        return Err(Error::DimensionMismatch("logical basis states have different dims".into()));
    }
    let cols: Vec<CVector> = basis.iter().map(|b| b.amplitudes().clone()).collect();
    let b = CMatrix::from_columns(&cols);
    let gram = b.adjoint() * &b;
    let defect = (gram - CMatrix::identity(4, 4)).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if defect > 1e-10 {
        return Err(Error::NonOrthonormal(format!("Gram matrix deviates from identity by {defect:e}")));
    }
    Ok(b)
}

/// The sixteen logical inputs `{0, 1, +, +i}^⊗2` as 4-dim vectors.
fn spanning_inputs() -> Vec<CVector> {
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let single = [
        CVector::from_vec(vec![ONE, ZERO]),
        CVector::from_vec(vec![ZERO, ONE]),
        CVector::from_vec(vec![h, h]),
        CVector::from_vec(vec![h, I * h]),
    ];
    let mut out = Vec::with_capacity(16);
    for a in &single {
        for b in &single {
            out.push(a.kronecker(b));
        }
    }
    out
}

/// PTM of a physical process restricted to the span of `basis`.
///
/// The process is evaluated on the sixteen pure inputs `B|φ_k⟩` with `φ_k ∈ {0, 1, +, +i}^⊗2`;
/// each Pauli `P_j` is expanded in their projectors and `E(P_j)` follows by linearity.
pub fn pauli_transfer(
    mut process: impl FnMut(&DensityMatrix) -> Result<DensityMatrix>,
    basis: &[StateVector],
) -> Result<PauliTransferMatrix> {
    pauli_transfer_map(|rho| Ok(process(rho)?.into_matrix()), basis)
}

/// As [`pauli_transfer`] for a map that need not preserve the trace (e.g. a post-selected one).
pub fn pauli_transfer_map(
    mut process: impl FnMut(&DensityMatrix) -> Result<CMatrix>,
    basis: &[StateVector],
) -> Result<PauliTransferMatrix> {
    let b = logical_isometry(basis)?;
    let dims = basis[0].dims().to_vec();
    let inputs = spanning_inputs();

    // outputs compressed to the logical space: B† E(ρ_k) B
    let mut outputs = Vec::with_capacity(16);
    for phi in &inputs {
        let psi = StateVector::new(dims.clone(), &b * phi)?;
        let out = process(&DensityMatrix::from_state(&psi))?;
        if out.shape() != (b.nrows(), b.nrows()) {
            return Err(Error::DimensionMismatch(format!("process output {:?} vs dims {dims:?}", out.shape())));
        }
        outputs.push(b.adjoint() * out * &b);
    }

    // expansion coefficients: vec(P_j) = Σ_k c_kj vec(ρ_k)
    let projectors = CMatrix::from_columns(
        &inputs.iter().map(|v| CVector::from_iterator(16, (v * v.adjoint()).iter().copied())).collect::<Vec<_>>(),
    );
    let lu = projectors.lu();
    let paulis = two_qubit_paulis();
    let mut r = DMatrix::zeros(16, 16);
    for (j, pj) in paulis.iter().enumerate() {
        let coeffs = lu
            .solve(&CVector::from_iterator(16, pj.iter().copied()))
            .ok_or_else(|| Error::Singular("QPT input projectors".into()))?;
        let mut e = CMatrix::zeros(4, 4);
        for (c, out) in coeffs.iter().zip(&outputs) {
            e += out * *c;
        }
        for (i, pi) in paulis.iter().enumerate() {
            r[(i, j)] = trace_product(pi, &e).re / 4.0;
        }
    }
    Ok(PauliTransferMatrix { d: 4, matrix: r })
}

/// Project mode `coupler` onto `|g⟩`: returns the renormalised state and the success probability.
pub fn postselect_ground(rho: &DensityMatrix, coupler: usize) -> Result<(DensityMatrix, f64)> {
    let dims = rho.dims();
    if coupler >= dims.len() {
        return Err(Error::OutOfRange { index: coupler, dim: dims.len() });
    }
    let g = hilbert::fock_state(dims[coupler], 0)?;
    let proj = hilbert::Operator::new(vec![dims[coupler]], g.projector())?;
    let p = hilbert::embed(&proj, dims, coupler)?.into_matrix();
    let kept = &p * rho.matrix() * &p;
    let prob = crate::linalg::trace(&kept).re;
    if prob < 1e-12 {
        return Err(Error::DegeneratePostselection(prob));
    }
    let out = DensityMatrix::with_tolerance(dims.to_vec(), crate::linalg::hermitian_part(&(kept / C64::from(prob))), 1e-8)?;
    Ok((out, prob))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{qubit_state, LogicalLabel};

    fn qubit_basis() -> Vec<StateVector> {
        let (g, e) = (qubit_state(LogicalLabel::G), qubit_state(LogicalLabel::E));
        vec![g.tensor(&g), g.tensor(&e), e.tensor(&g), e.tensor(&e)]
    }

    fn cz() -> CMatrix {
        let mut u = CMatrix::identity(4, 4);
        u[(3, 3)] = -ONE;
        u
    }

    #[test]
    fn identity_process() {
        let r = pauli_transfer(|rho| Ok(rho.clone()), &qubit_basis()).unwrap();
        assert!((r.matrix() - DMatrix::<f64>::identity(16, 16)).abs().max() < 1e-12);
    }

    #[test]
    fn depolarizing_process() {
        let r = pauli_transfer(
            |rho| DensityMatrix::new(rho.dims().to_vec(), CMatrix::identity(4, 4) * C64::from(0.25)),
            &qubit_basis(),
        )
        .unwrap();
        let mut expect = DMatrix::zeros(16, 16);
        expect[(0, 0)] = 1.0;
        assert!((r.matrix() - expect).abs().max() < 1e-12);
        assert!((process_fidelity(&r, &PauliTransferMatrix::identity()).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cz_matches_pauli_conjugation_table() {
        let u = cz();
        let r = pauli_transfer(
            |rho| DensityMatrix::new(rho.dims().to_vec(), &u * rho.matrix() * u.adjoint()),
            &qubit_basis(),
        )
        .unwrap();
        // CZ maps XI → XZ, IX → ZX, YI → YZ, IY → ZY and fixes Z-type Paulis, up to sign
        let labels = pauli_labels();
        let idx = |s: &str| labels.iter().position(|l| l == s).unwrap();
        assert!((r.matrix()[(idx("XZ"), idx("XI"))] - 1.0).abs() < 1e-12);
        assert!((r.matrix()[(idx("ZX"), idx("IX"))] - 1.0).abs() < 1e-12);
        assert!((r.matrix()[(idx("ZZ"), idx("ZZ"))] - 1.0).abs() < 1e-12);
        assert!((r.matrix()[(idx("YY"), idx("XX"))] - 1.0).abs() < 1e-12);
        assert!((process_fidelity(&r, &PauliTransferMatrix::from_unitary(&u).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_formula() {
        let id = PauliTransferMatrix::identity();
        assert_eq!(process_fidelity(&id, &id).unwrap(), 1.0);
        let bad = PauliTransferMatrix::new(DMatrix::identity(4, 4)).unwrap();
        assert!(process_fidelity(&bad, &id).is_err());
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let mut b = qubit_basis();
        b[1] = b[0].clone();
        assert!(matches!(pauli_transfer(|r| Ok(r.clone()), &b), Err(Error::NonOrthonormal(_))));
    }

    #[test]
    fn postselection() {
        let g = qubit_state(LogicalLabel::G);
        let plus = qubit_state(LogicalLabel::Plus);
        let rho = DensityMatrix::from_state(&g.tensor(&g));
        let (out, p) = postselect_ground(&rho, 1).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert!(crate::linalg::max_abs_diff(out.matrix(), rho.matrix()) < 1e-15);
        let rho = DensityMatrix::from_state(&g.tensor(&plus));
        let (out, p) = postselect_ground(&rho, 1).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((out.fidelity_to(&g.tensor(&g)) - 1.0).abs() < 1e-12);
        let rho = DensityMatrix::from_state(&g.tensor(&qubit_state(LogicalLabel::E)));
        assert!(matches!(postselect_ground(&rho, 1), Err(Error::DegeneratePostselection(_))));
    }

    #[test]
    fn csv_has_labels() {
        let s = PauliTransferMatrix::identity().to_csv_string();
        let first = s.lines().next().unwrap();
        assert!(first.starts_with("R,II,IX,IY,IZ,XI"));
        assert_eq!(s.lines().count(), 17);
    }
}

//! Truncated Fock-space states and operators, tensor composition, and the lowest-order
//! binomial codewords `|0_L⟩ = (|0⟩+|4⟩)/√2`, `|1_L⟩ = |2⟩`.
//!
//! Mode ordering is always the order of the `dims` slice (the first mode is the most
//! significant index of the flattened vector).

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix, CVector, HermitianEigen, C64, I, ONE, ZERO};

/// Pure state on a tensor product of truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amplitudes: CVector,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amplitudes: CVector) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDimension(format!("dims {dims:?}")));
        }
        if amplitudes.len() != total {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dims {dims:?} (expected {total})",
                amplitudes.len()
            )));
        }
        Ok(Self { dims, amplitudes })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes /= C64::from(n);
        }
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        StateVector { dims, amplitudes: linalg::kron_vec(&self.amplitudes, &other.amplitudes) }
    }

    pub fn tensor_all(states: &[StateVector]) -> StateVector {
        let mut it = states.iter();
        let first = it.next().expect("at least one factor").clone();
        it.fold(first, |acc, s| acc.tensor(s))
    }

    pub fn scaled(&self, factor: C64) -> StateVector {
        StateVector { dims: self.dims.clone(), amplitudes: &self.amplitudes * factor }
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(StateVector { dims: self.dims.clone(), amplitudes: &self.amplitudes + &other.amplitudes })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Dense operator on a tensor product of truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    matrix: CMatrix,
    hermitian: bool,
}

/// Tolerance for the Hermitian flag, relative to the largest entry (absolute below unit scale).
const HERMITIAN_TOL: f64 = 1e-12;

impl Operator {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        Self::check_shape(&dims, &matrix)?;
        Ok(Self { dims, matrix, hermitian: false })
    }

    /// Construct and verify Hermiticity.
    pub fn hermitian(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        Self::check_shape(&dims, &matrix)?;
        let scale = linalg::max_abs(&matrix).max(1.0);
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::InvalidDimension(format!("matrix not Hermitian (defect {defect:e})")));
        }
        Ok(Self { dims, matrix, hermitian: true })
    }

    fn check_shape(dims: &[usize], matrix: &CMatrix) -> Result<()> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDimension(format!("dims {dims:?}")));
        }
        if matrix.nrows() != total || matrix.ncols() != total {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dims {dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(())
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self { dims, matrix: CMatrix::identity(n, n), hermitian: true }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self { dims, matrix: CMatrix::zeros(n, n), hermitian: true }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Operator {
        Operator { dims: self.dims.clone(), matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dims != self.dims {
            return Err(Error::DimensionMismatch(format!(
                "operator dims {:?} vs state dims {:?}",
                self.dims, state.dims
            )));
        }
        Ok(StateVector { dims: self.dims.clone(), amplitudes: &self.matrix * &state.amplitudes })
    }

    pub fn compose(&self, rhs: &Operator) -> Result<Operator> {
        if self.dims != rhs.dims {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.dims, rhs.dims)));
        }
        Ok(Operator { dims: self.dims.clone(), matrix: &self.matrix * &rhs.matrix, hermitian: false })
    }

    pub fn tensor(&self, rhs: &Operator) -> Operator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&rhs.dims);
        Operator {
            dims,
            matrix: linalg::kron(&self.matrix, &rhs.matrix),
            hermitian: self.hermitian && rhs.hermitian,
        }
    }

    /// Linear combination `Σ c_k O_k` of operators on identical dims.
    pub fn sum(terms: &[(f64, &Operator)]) -> Result<Operator> {
        let (_, first) = terms.first().ok_or_else(|| Error::Missing("empty operator sum".into()))?;
        let mut m = CMatrix::zeros(first.dim(), first.dim());
        let mut herm = true;
        for (coef, op) in terms {
            if op.dims != first.dims {
                return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", op.dims, first.dims)));
            }
            m += &op.matrix * C64::from(*coef);
            herm &= op.hermitian;
        }
        Ok(Operator { dims: first.dims.clone(), matrix: m, hermitian: herm })
    }

    /// Expectation value `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<C64> {
        Ok(state.inner(&self.apply(state)?))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator(dims={:?})", self.dims)
    }
}

/// Single-qubit and logical-qubit preparation labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalLabel {
    G,
    E,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl LogicalLabel {
    pub const ALL: [LogicalLabel; 6] = [
        LogicalLabel::G,
        LogicalLabel::E,
        LogicalLabel::Plus,
        LogicalLabel::Minus,
        LogicalLabel::PlusI,
        LogicalLabel::MinusI,
    ];

    /// Coefficients `(a, b)` of `a|0⟩ + b|1⟩`.
    pub fn coefficients(self) -> (C64, C64) {
        let h = FRAC_1_SQRT_2;
        match self {
            LogicalLabel::G => (ONE, ZERO),
            LogicalLabel::E => (ZERO, ONE),
            LogicalLabel::Plus => (c(h, 0.0), c(h, 0.0)),
            LogicalLabel::Minus => (c(h, 0.0), c(-h, 0.0)),
            LogicalLabel::PlusI => (c(h, 0.0), c(0.0, h)),
            LogicalLabel::MinusI => (c(h, 0.0), c(0.0, -h)),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LogicalLabel::G => "g",
            LogicalLabel::E => "e",
            LogicalLabel::Plus => "+",
            LogicalLabel::Minus => "-",
            LogicalLabel::PlusI => "+i",
            LogicalLabel::MinusI => "-i",
        }
    }
}

impl fmt::Display for LogicalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

pub fn fock_state(dim: usize, n: usize) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim must be positive".into()));
    }
    if n >= dim {
        return Err(Error::OutOfRange { index: n, dim });
    }
    let mut v = CVector::zeros(dim);
    v[n] = ONE;
    StateVector::new(vec![dim], v)
}

/// Qubit state for a preparation label in the `{|g⟩, |e⟩}` basis.
pub fn qubit_state(label: LogicalLabel) -> StateVector {
    let (a, b) = label.coefficients();
    StateVector { dims: vec![2], amplitudes: CVector::from_vec(vec![a, b]) }
}

/// Binomial-code logical state on a cavity of truncation `dim ≥ 5`.
pub fn logical_state(label: LogicalLabel, dim: usize) -> Result<StateVector> {
    if dim < 5 {
        return Err(Error::TruncationTooSmall(format!("binomial codewords need dim >= 5, got {dim}")));
    }
    let (a, b) = label.coefficients();
    let mut v = CVector::zeros(dim);
    v[0] = a * FRAC_1_SQRT_2;
    v[4] = a * FRAC_1_SQRT_2;
    v[2] = b;
    StateVector::new(vec![dim], v)
}

/// The two codewords `[|0_L⟩, |1_L⟩]`.
pub fn codewords(dim: usize) -> Result<[StateVector; 2]> {
    Ok([logical_state(LogicalLabel::G, dim)?, logical_state(LogicalLabel::E, dim)?])
}

pub fn annihilation(dim: usize) -> Result<Operator> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("annihilation needs dim >= 2, got {dim}")));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    Operator::new(vec![dim], m)
}

pub fn number(dim: usize) -> Operator {
    let m = CMatrix::from_diagonal(&CVector::from_fn(dim, |n, _| C64::from(n as f64)));
    Operator { dims: vec![dim], matrix: m, hermitian: true }
}

/// `(σ_x, σ_y, |e⟩⟨e|)` in the `{|g⟩, |e⟩}` basis.
pub fn qubit_ops() -> (Operator, Operator, Operator) {
    let sx = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let sy = CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]);
    let pe = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
    (
        Operator { dims: vec![2], matrix: sx, hermitian: true },
        Operator { dims: vec![2], matrix: sy, hermitian: true },
        Operator { dims: vec![2], matrix: pe, hermitian: true },
    )
}

/// `σ_z = |g⟩⟨g| - |e⟩⟨e|`.
pub fn sigma_z() -> Operator {
    let m = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
    Operator { dims: vec![2], matrix: m, hermitian: true }
}

/// Lowering operator `σ⁻ = |g⟩⟨e|`.
pub fn sigma_minus() -> Operator {
    let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
    Operator { dims: vec![2], matrix: m, hermitian: false }
}

/// Lift a single-mode operator to `I ⊗ … ⊗ op ⊗ … ⊗ I`.
pub fn embed(op: &Operator, system_dims: &[usize], mode_index: usize) -> Result<Operator> {
    embed_modes(op, system_dims, &[mode_index])
}

/// Lift an operator acting on the (ordered) subset `modes` of `system_dims`.
/// `op.dims()` must equal the dims of those modes, in the given order.
pub fn embed_modes(op: &Operator, system_dims: &[usize], modes: &[usize]) -> Result<Operator> {
    for &m in modes {
        if m >= system_dims.len() {
            return Err(Error::OutOfRange { index: m, dim: system_dims.len() });
        }
    }
    let sub_dims: Vec<usize> = modes.iter().map(|&m| system_dims[m]).collect();
    if sub_dims != op.dims {
        return Err(Error::DimensionMismatch(format!(
            "operator dims {:?} do not match modes {modes:?} of system {system_dims:?}",
            op.dims
        )));
    }
    let total: usize = system_dims.iter().product();
    let layout = ModeLayout::new(system_dims, modes);
    let mut m = CMatrix::zeros(total, total);
    let sub = &op.matrix;
    // iterate over spectator configurations and sub-blocks
    for spec in 0..layout.spectator_count {
        for a in 0..layout.sub_count {
            let row = layout.full_index(a, spec);
            for b in 0..layout.sub_count {
                let v = sub[(a, b)];
                if v.re != 0.0 || v.im != 0.0 {
                    m[(row, layout.full_index(b, spec))] = v;
                }
            }
        }
    }
    Ok(Operator { dims: system_dims.to_vec(), matrix: m, hermitian: op.hermitian })
}

/// Index bookkeeping for an ordered subset of modes within a larger product space.
#[derive(Debug, Clone)]
pub(crate) struct ModeLayout {
    strides: Vec<usize>,
    dims: Vec<usize>,
    modes: Vec<usize>,
    spectators: Vec<usize>,
    pub sub_count: usize,
    pub spectator_count: usize,
}

impl ModeLayout {
    pub fn new(system_dims: &[usize], modes: &[usize]) -> Self {
        let n = system_dims.len();
        let mut strides = vec![1; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * system_dims[k + 1];
        }
        let spectators: Vec<usize> = (0..n).filter(|k| !modes.contains(k)).collect();
        Self {
            strides,
            dims: system_dims.to_vec(),
            modes: modes.to_vec(),
            sub_count: modes.iter().map(|&m| system_dims[m]).product(),
            spectator_count: spectators.iter().map(|&m| system_dims[m]).product(),
            spectators,
        }
    }

    /// Flattened index for sub-index `a` (over `modes`) and spectator index `s`.
    pub fn full_index(&self, mut a: usize, mut s: usize) -> usize {
        let mut idx = 0;
        for &m in self.modes.iter().rev() {
            idx += (a % self.dims[m]) * self.strides[m];
            a /= self.dims[m];
        }
        for &m in self.spectators.iter().rev() {
            idx += (s % self.dims[m]) * self.strides[m];
            s /= self.dims[m];
        }
        idx
    }
}

/// Partial trace keeping the ordered subset `keep` of modes.
pub fn partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.nrows() != total || rho.ncols() != total {
        return Err(Error::DimensionMismatch(format!("rho {}x{} vs dims {dims:?}", rho.nrows(), rho.ncols())));
    }
    let layout = ModeLayout::new(dims, keep);
    let k = layout.sub_count;
    let mut out = CMatrix::zeros(k, k);
    for s in 0..layout.spectator_count {
        for a in 0..k {
            let ra = layout.full_index(a, s);
            for b in 0..k {
                out[(a, b)] += rho[(ra, layout.full_index(b, s))];
            }
        }
    }
    Ok(out)
}

/// Diagonal parity operator with entries `(-1)^n`.
pub fn parity(dim: usize) -> Operator {
    let m = CMatrix::from_diagonal(&CVector::from_fn(dim, |n, _| C64::from(if n % 2 == 0 { 1.0 } else { -1.0 })));
    Operator { dims: vec![dim], matrix: m, hermitian: true }
}

/// Whether `|β|²` exceeds the faithful-truncation heuristic `dim / 4`.
pub fn truncation_risk(dim: usize, beta: C64) -> bool {
    beta.norm_sqr() > dim as f64 / 4.0
}

/// Displacement generator on a fixed truncation.
///
/// `D(β) = R(θ) exp(r (a† − a)) R(θ)†` with `β = r e^{iθ}` and `R(θ) = e^{iθ n̂}`; the real-axis
/// exponential comes from one Hermitian eigendecomposition of `i (a† − a)`, reused for every β.
#[derive(Debug, Clone)]
pub struct Displacer {
    dim: usize,
    eigen: HermitianEigen,
    warned: std::cell::Cell<bool>,
}

impl Displacer {
    pub fn new(dim: usize) -> Self {
        let mut k = CMatrix::zeros(dim, dim);
        for n in 1..dim {
            let s = (n as f64).sqrt();
            // i (a† - a): (a†)_{n,n-1} = √n, (a)_{n-1,n} = √n
            k[(n, n - 1)] = I * s;
            k[(n - 1, n)] = -I * s;
        }
        Self { dim, eigen: HermitianEigen::new(&k), warned: std::cell::Cell::new(false) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self, beta: C64) -> CMatrix {
        // warn once per displacer
        if truncation_risk(self.dim, beta) && !self.warned.replace(true) {
            log::warn!("displacement |beta|^2 = {:.3} exceeds dim/4 = {:.3}", beta.norm_sqr(), self.dim as f64 / 4.0);
        }
        let r = beta.norm();
        let theta = beta.arg();
        // exp(r(a† - a)) = exp(-i r K) with K = i(a† - a)
        let mut d = self.eigen.propagator(r);
        if theta != 0.0 {
            for i in 0..self.dim {
                for j in 0..self.dim {
                    d[(i, j)] *= C64::from_polar(1.0, theta * (i as f64 - j as f64));
                }
            }
        }
        d
    }
}

/// `D(β) = exp(β a† − β* a)` on a truncation of `dim` levels.
pub fn displacement(dim: usize, beta: C64) -> Result<Operator> {
    if dim == 0 {
        return Err(Error::InvalidDimension("dim must be positive".into()));
    }
    Operator::new(vec![dim], Displacer::new(dim).matrix(beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn amp(s: &StateVector, i: usize) -> C64 {
        s.amplitudes()[i]
    }

    #[test]
    fn fock_basis_vectors() {
        let s = fock_state(3, 0).unwrap();
        assert_eq!(s.amplitudes().as_slice(), &[ONE, ZERO, ZERO]);
        let s = fock_state(5, 4).unwrap();
        assert_eq!(amp(&s, 4), ONE);
        assert!((s.norm() - 1.0).abs() < 1e-15);
        assert!(matches!(fock_state(3, 3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn annihilation_action() {
        let a = annihilation(3).unwrap();
        assert!(!a.is_hermitian());
        let out = a.apply(&fock_state(3, 1).unwrap()).unwrap();
        assert_eq!(out, fock_state(3, 0).unwrap());
        let a5 = annihilation(5).unwrap();
        let out = a5.apply(&fock_state(5, 4).unwrap()).unwrap();
        assert!((amp(&out, 3) - c(2.0, 0.0)).norm() < 1e-15);
        let out = a.apply(&fock_state(3, 0).unwrap()).unwrap();
        assert_eq!(out.norm(), 0.0);
        assert!(annihilation(1).is_err());
    }

    #[test]
    fn commutator_on_untruncated_levels() {
        let dim = 7;
        let a = annihilation(dim).unwrap().into_matrix();
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        for i in 0..dim - 1 {
            for j in 0..dim - 1 {
                let expect = if i == j { ONE } else { ZERO };
                assert!((comm[(i, j)] - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn qubit_ops_actions() {
        let (sx, sy, pe) = qubit_ops();
        let g = qubit_state(LogicalLabel::G);
        let e = qubit_state(LogicalLabel::E);
        assert_eq!(sx.apply(&g).unwrap(), e);
        assert_eq!(sy.apply(&g).unwrap(), e.scaled(I));
        assert_eq!(pe.apply(&g).unwrap().norm(), 0.0);
    }

    #[test]
    fn embed_examples() {
        let (sx, _, _) = qubit_ops();
        let dims = [2, 3];
        let psi = qubit_state(LogicalLabel::G).tensor(&fock_state(3, 2).unwrap());
        let out = embed(&sx, &dims, 0).unwrap().apply(&psi).unwrap();
        assert_eq!(out, qubit_state(LogicalLabel::E).tensor(&fock_state(3, 2).unwrap()));
        let n = embed(&number(3), &dims, 1).unwrap();
        assert!((n.expectation(&psi).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        assert!(matches!(embed(&annihilation(3).unwrap(), &[2, 2], 1), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn embed_noncontiguous_matches_kron() {
        let a = annihilation(3).unwrap();
        let (sx, _, _) = qubit_ops();
        let pair = a.tensor(&sx);
        let lifted = embed_modes(&pair, &[3, 2, 2], &[0, 2]).unwrap();
        let expected = a.tensor(&Operator::identity(vec![2])).tensor(&sx);
        assert!(max_abs_diff(lifted.matrix(), expected.matrix()) < 1e-15);
        // reversed order
        let pair_rev = sx.tensor(&a);
        let lifted = embed_modes(&pair_rev, &[3, 2, 2], &[2, 0]).unwrap();
        assert!(max_abs_diff(lifted.matrix(), expected.matrix()) < 1e-15);
    }

    #[test]
    fn embed_preserves_spectrum() {
        let n = number(3);
        let lifted = embed(&n, &[2, 3, 2], 1).unwrap();
        let mut eig: Vec<f64> = HermitianEigen::new(lifted.matrix()).values.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0];
        for (x, y) in eig.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn logical_states() {
        let g = logical_state(LogicalLabel::G, 5).unwrap();
        let h = FRAC_1_SQRT_2;
        assert!((amp(&g, 0).re - h).abs() < 1e-15 && (amp(&g, 4).re - h).abs() < 1e-15);
        let e = logical_state(LogicalLabel::E, 5).unwrap();
        assert_eq!(amp(&e, 2), ONE);
        let p = logical_state(LogicalLabel::Plus, 5).unwrap();
        let expected = [0.5, 0.0, h, 0.0, 0.5];
        for (i, x) in expected.iter().enumerate() {
            assert!((amp(&p, i) - c(*x, 0.0)).norm() < 1e-15);
        }
        for label in LogicalLabel::ALL {
            assert!((logical_state(label, 7).unwrap().norm() - 1.0).abs() < 1e-12);
        }
        assert!(g.inner(&e).norm() < 1e-15);
        assert!(matches!(logical_state(LogicalLabel::G, 4), Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn parity_and_trivial_displacement() {
        let p = parity(4);
        let d: Vec<f64> = p.matrix().diagonal().iter().map(|x| x.re).collect();
        assert_eq!(d, vec![1.0, -1.0, 1.0, -1.0]);
        let d0 = displacement(6, ZERO).unwrap();
        assert!(max_abs_diff(d0.matrix(), &CMatrix::identity(6, 6)) < 1e-13);
    }

    /// Brute-force Taylor series of `exp(G)`, independent of the eigendecomposition path.
    fn expm_series(g: &CMatrix) -> CMatrix {
        let n = g.nrows();
        let mut term = CMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..200 {
            term = &term * g / C64::from(k as f64);
            sum += &term;
            if linalg::max_abs(&term) < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn coherent_state_mean_photon_number() {
        let dim = 20;
        let a = annihilation(dim).unwrap().into_matrix();
        let beta = c(1.0, 0.0);
        let gen = a.adjoint() * beta - &a * beta.conj();
        let d_series = expm_series(&gen);
        let d = displacement(dim, beta).unwrap();
        assert!(max_abs_diff(d.matrix(), &d_series) < 1e-10);
        let n = number(dim).into_matrix();
        let vac = fock_state(dim, 0).unwrap();
        let psi = d.matrix() * vac.amplitudes();
        let mean = psi.dotc(&(&n * &psi)).re;
        assert!((mean - 1.0).abs() < 1e-6, "mean photon number {mean}");
    }

    #[test]
    fn displacement_group_and_parity_identities() {
        let dim = 24;
        let pi = parity(dim).into_matrix();
        for beta in [c(0.3, -0.2), c(-1.1, 0.9), c(0.0, 1.5), c(1.4, 1.4)] {
            let dp = displacement(dim, beta).unwrap().into_matrix();
            let dm = displacement(dim, -beta).unwrap().into_matrix();
            assert!(max_abs_diff(&(&dp * &dm), &CMatrix::identity(dim, dim)) < 1e-10);
            assert!(max_abs_diff(&(&pi * &dp * &pi), &dm) < 1e-10);
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let a = qubit_state(LogicalLabel::Plus);
        let b = fock_state(3, 1).unwrap();
        let rho = a.tensor(&b).projector();
        let ra = partial_trace(&rho, &[2, 3], &[0]).unwrap();
        assert!(max_abs_diff(&ra, &a.projector()) < 1e-15);
        let rb = partial_trace(&rho, &[2, 3], &[1]).unwrap();
        assert!(max_abs_diff(&rb, &b.projector()) < 1e-15);
    }
}

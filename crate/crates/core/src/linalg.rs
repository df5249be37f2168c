//! Dense complex linear-algebra helpers shared by every module.
//!
//! All matrix exponentials in the crate go through [`HermitianEigen`]: a Hermitian generator is
//! diagonalised once and `exp(-i H t)` is assembled from its spectrum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Spectral decomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Self {
        let n = h.nrows();
        if n == 1 {
            return Self {
                values: DVector::from_element(1, h[(0, 0)].re),
                vectors: CMatrix::identity(1, 1),
            };
        }
        if n == 2 {
            return eigh_2x2(h);
        }
        let eig = h.clone().symmetric_eigen();
        Self { values: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `f(H) = V diag(f(λ)) V†` for a complex-valued spectral function.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = f(self.values[j]);
            scaled.column_mut(j).scale_mut_complex(fj);
        }
        scaled * self.vectors.adjoint()
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        self.apply_fn(|l| C64::from_polar(1.0, -l * t))
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, s: C64) {
        for x in self.iter_mut() {
            *x *= s;
        }
    }
}

/// Closed-form eigendecomposition of a 2×2 Hermitian matrix.
fn eigh_2x2(h: &CMatrix) -> HermitianEigen {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    let values = DVector::from_vec(vec![mean - r, mean + r]);
    let mut vectors = CMatrix::zeros(2, 2);
    if b.norm() <= 1e-300 {
        // already diagonal; keep ascending order
        if a <= d {
            vectors[(0, 0)] = ONE;
            vectors[(1, 1)] = ONE;
        } else {
            vectors[(1, 0)] = ONE;
            vectors[(0, 1)] = ONE;
        }
        return HermitianEigen { values, vectors };
    }
    // Eigenvector for λ: (b, λ - a) or (λ - d, b*); pick the better-conditioned form.
    for (col, &lam) in values.iter().enumerate() {
        let v1 = (b, C64::from(lam - a));
        let v2 = (C64::from(lam - d), b.conj());
        let n1 = v1.0.norm_sqr() + v1.1.norm_sqr();
        let n2 = v2.0.norm_sqr() + v2.1.norm_sqr();
        let (x, y, n) = if n1 >= n2 { (v1.0, v1.1, n1) } else { (v2.0, v2.1, n2) };
        let s = 1.0 / n.sqrt();
        vectors[(0, col)] = x * s;
        vectors[(1, col)] = y * s;
    }
    HermitianEigen { values, vectors }
}

/// Divided difference of `f(λ) = exp(-i λ t)` between two eigenvalues, stable at degeneracy:
/// `(f(a) - f(b)) / (a - b) = -i t exp(-i (a+b) t / 2) sinc((a-b) t / 2)`.
pub fn exp_divided_difference(a: f64, b: f64, t: f64) -> C64 {
    let x = 0.5 * (a - b) * t;
    let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 + x.powi(4) / 120.0 } else { x.sin() / x };
    -I * t * C64::from_polar(1.0, -0.5 * (a + b) * t) * sinc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |M - M†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let p = u.adjoint() * u;
    max_abs_diff(&p, &CMatrix::identity(u.nrows(), u.ncols()))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Extend the orthonormal sets `inputs` and `outputs` (equal length) to bases and return a
/// unitary `U` with `U inputs[k] = outputs[k]`.
pub fn complete_unitary(inputs: &[CVector], outputs: &[CVector]) -> Result<CMatrix> {
    if inputs.len() != outputs.len() || inputs.is_empty() {
        return Err(Error::DimensionMismatch("input/output sets must be equal and nonempty".into()));
    }
    let n = inputs[0].len();
    let q = extend_to_basis(inputs, n)?;
    let s = extend_to_basis(outputs, n)?;
    Ok(s * q.adjoint())
}

fn extend_to_basis(vectors: &[CVector], n: usize) -> Result<CMatrix> {
    let mut basis: Vec<CVector> = Vec::with_capacity(n);
    for v in vectors {
        if v.len() != n {
            return Err(Error::DimensionMismatch("vectors of unequal length".into()));
        }
        for b in &basis {
            if b.dotc(v).norm() > 1e-9 {
                return Err(Error::NonOrthonormal("vectors to extend are not orthogonal".into()));
            }
        }
        if (v.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::NonOrthonormal("vectors to extend are not normalised".into()));
        }
        basis.push(v.clone());
    }
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = CVector::zeros(n);
        e[k] = ONE;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&e);
                e -= b * proj;
            }
        }
        let norm = e.norm();
        if norm > 1e-8 {
            basis.push(e / C64::from(norm));
        }
    }
    if basis.len() != n {
        return Err(Error::Singular("basis completion failed".into()));
    }
    Ok(CMatrix::from_columns(&basis))
}

/// Hermitian part `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Nonzero entries `(row, col, value)` of a matrix.
pub fn sparse_entries(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.re != 0.0 || v.im != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

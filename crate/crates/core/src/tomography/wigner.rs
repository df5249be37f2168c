//! Wigner functions from displaced parity.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Displacer;
use crate::linalg::{CMatrix, C64};

/// Wigner samples at a list of phase-space points (one `β` per mode at every point).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub modes: Vec<String>,
    pub points: Vec<Vec<C64>>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    /// Square grid of `n × n` points over `[−extent, extent]²`.
    pub fn square(extent: f64, n: usize) -> Vec<C64> {
        let step = if n > 1 { 2.0 * extent / (n - 1) as f64 } else { 0.0 };
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for r in 0..n {
                out.push(C64::new(-extent + r as f64 * step, -extent + i as f64 * step));
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Columns `re_b1, im_b1[, re_b2, im_b2], W`.
    pub fn to_csv_string(&self) -> String {
        let n_modes = self.modes.len();
        let mut s = String::new();
        for k in 1..=n_modes {
            let _ = write!(s, "re_b{k},im_b{k},");
        }
        s.push_str("W\n");
        for (p, w) in self.points.iter().zip(&self.values) {
            for b in p {
                let _ = write!(s, "{:.6},{:.6},", b.re, b.im);
            }
            let _ = writeln!(s, "{w:.12e}");
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// `Tr[ρ D(β) Π D(β)†] = Σ_n (−1)^n (D† ρ D)_nn`.
fn displaced_parity(rho: &CMatrix, d: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for n in 0..d.ncols() {
        let col = d.column(n);
        let v = (col.adjoint() * rho * col)[(0, 0)].re;
        acc += if n % 2 == 0 { v } else { -v };
    }
    acc
}

fn check_square(rho: &CMatrix, dim: usize) -> Result<()> {
    if rho.nrows() != dim || rho.ncols() != dim {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix, expected {dim}x{dim}", rho.nrows(), rho.ncols())));
    }
    Ok(())
}

/// `W(β) = (2/π) Tr[ρ D(β) Π D(β)†]` for a single-mode state.
pub fn wigner_single(rho: &CMatrix, label: &str, betas: &[C64]) -> Result<WignerGrid> {
    let dim = rho.nrows();
    check_square(rho, dim)?;
    let disp = Displacer::new(dim);
    let values = betas.iter().map(|&b| 2.0 / PI * displaced_parity(rho, &disp.matrix(b))).collect();
    Ok(WignerGrid { modes: vec![label.to_string()], points: betas.iter().map(|b| vec![*b]).collect(), values })
}

/// Cross-sections of the two-mode Wigner function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JointCut {
    /// `β₁` fixed, `β₂` over a square grid.
    FixBeta1 { beta1: (f64, f64), extent: f64, n: usize },
    /// `β₂` fixed, `β₁` over a square grid.
    FixBeta2 { beta2: (f64, f64), extent: f64, n: usize },
    /// Both displacements real: the `(Re β₁, Re β₂)` plane.
    RealAxes { extent: f64, n: usize },
    /// Both displacements imaginary: the `(Im β₁, Im β₂)` plane.
    ImagAxes { extent: f64, n: usize },
}

impl JointCut {
    pub fn name(&self) -> &'static str {
        match self {
            JointCut::FixBeta1 { .. } => "fix_beta1",
            JointCut::FixBeta2 { .. } => "fix_beta2",
            JointCut::RealAxes { .. } => "real_axes",
            JointCut::ImagAxes { .. } => "imag_axes",
        }
    }

    pub fn points(&self) -> Vec<(C64, C64)> {
        match *self {
            JointCut::FixBeta1 { beta1, extent, n } => {
                let b1 = C64::new(beta1.0, beta1.1);
                WignerGrid::square(extent, n).into_iter().map(|b| (b1, b)).collect()
            }
            JointCut::FixBeta2 { beta2, extent, n } => {
                let b2 = C64::new(beta2.0, beta2.1);
                WignerGrid::square(extent, n).into_iter().map(|b| (b, b2)).collect()
            }
            JointCut::RealAxes { extent, n } => {
                WignerGrid::square(extent, n).into_iter().map(|b| (C64::from(b.re), C64::from(b.im))).collect()
            }
            JointCut::ImagAxes { extent, n } => WignerGrid::square(extent, n)
                .into_iter()
                .map(|b| (C64::new(0.0, b.re), C64::new(0.0, b.im)))
                .collect(),
        }
    }
}

/// `W(β₁, β₂) = (4/π²) Tr[ρ D₁D₂ Π₁₂ D₁†D₂†]` for a state on two modes of dims `dims`.
pub fn wigner_joint(rho: &CMatrix, dims: (usize, usize), labels: (&str, &str), points: &[(C64, C64)]) -> Result<WignerGrid> {
    let (d1, d2) = dims;
    check_square(rho, d1 * d2)?;
    let (x1, x2) = (Displacer::new(d1), Displacer::new(d2));
    let mut values = Vec::with_capacity(points.len());
    for &(b1, b2) in points {
        let d = x1.matrix(b1).kronecker(&x2.matrix(b2));
        // joint parity of basis index (m, n) is (−1)^{m+n}
        let mut acc = 0.0;
        for k in 0..d.ncols() {
            let col = d.column(k);
            let v = (col.adjoint() * rho * col)[(0, 0)].re;
            acc += if (k / d2 + k % d2) % 2 == 0 { v } else { -v };
        }
        values.push(4.0 / (PI * PI) * acc);
    }
    Ok(WignerGrid {
        modes: vec![labels.0.to_string(), labels.1.to_string()],
        points: points.iter().map(|&(a, b)| vec![a, b]).collect(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{codewords, fock_state};

    fn dm(psi: &crate::hilbert::StateVector) -> CMatrix {
        psi.projector()
    }

    #[test]
    fn single_mode_origin_values() {
        let z = [C64::from(0.0)];
        let vac = wigner_single(&dm(&fock_state(10, 0).unwrap()), "S", &z).unwrap();
        assert!((vac.values[0] - 2.0 / PI).abs() < 1e-12);
        let one = wigner_single(&dm(&fock_state(10, 1).unwrap()), "S", &z).unwrap();
        assert!((one.values[0] + 2.0 / PI).abs() < 1e-12);
        let [zero_l, _] = codewords(10).unwrap();
        let w = wigner_single(&dm(&zero_l), "S", &z).unwrap();
        assert!((w.values[0] - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn coherent_state_gaussian() {
        // vacuum displaced: W(β) = (2/π) exp(−2|β|²)
        let b = C64::new(0.3, -0.4);
        let w = wigner_single(&dm(&fock_state(30, 0).unwrap()), "S", &[b]).unwrap();
        assert!((w.values[0] - 2.0 / PI * (-2.0 * b.norm_sqr()).exp()).abs() < 1e-10);
    }

    #[test]
    fn joint_vacuum_and_csv() {
        let v = fock_state(6, 0).unwrap();
        let rho = dm(&v.tensor(&v));
        let g = wigner_joint(&rho, (6, 6), ("S1", "S2"), &[(C64::from(0.0), C64::from(0.0))]).unwrap();
        assert!((g.values[0] - 4.0 / (PI * PI)).abs() < 1e-12);
        assert!(g.to_csv_string().starts_with("re_b1,im_b1,re_b2,im_b2,W\n"));
    }

    #[test]
    fn cut_sizes() {
        for cut in [
            JointCut::FixBeta1 { beta1: (0.5, 0.0), extent: 1.0, n: 5 },
            JointCut::RealAxes { extent: 1.0, n: 5 },
            JointCut::ImagAxes { extent: 1.0, n: 5 },
        ] {
            assert_eq!(cut.points().len(), 25);
        }
        let p = JointCut::ImagAxes { extent: 1.0, n: 3 }.points();
        assert!(p.iter().all(|(a, b)| a.re == 0.0 && b.re == 0.0));
    }
}

//! Dispersive multi-mode Hamiltonians.
//!
//! Everything is expressed in the rotating frame of each mode, so mode frequencies drop out and
//! the static Hamiltonian is diagonal in the Fock/qubit product basis:
//!
//! ```text
//! H = Σ_cavities −(K/2) a†a†aa  −  Σ_couplings χ_ab N_a N_b
//! ```
//!
//! where `N` is `a†a` for a cavity and `|e⟩⟨e|` for a qubit.

mod blocks;
mod config;

pub use blocks::{block_decompose, BlockSystem, Sector, SECTOR_PHOTONS};
pub use config::{load_system, load_system_str, paper_profile, PAPER_PROFILE_TOML};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{self, Operator};
use crate::linalg::{CMatrix, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Cavity,
    Qubit,
}

/// One bosonic or two-level mode. Rates are angular (rad/s), times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: String,
    pub kind: ModeKind,
    pub dim: usize,
    /// Informational only; the rotating frame removes it.
    pub frequency: f64,
    /// Self-Kerr magnitude `K` (cavities); enters as `−(K/2) a†a†aa`.
    pub self_kerr: f64,
    /// Transmon anharmonicity, kept for provenance; unused because qubits are two-level.
    pub anharmonicity: Option<f64>,
    pub t1: f64,
    pub t2: f64,
}

/// Cross-Kerr magnitude `χ` between two modes; enters as `−χ N_a N_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub mode_a: String,
    pub mode_b: String,
    pub chi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub modes: Vec<ModeSpec>,
    pub couplings: Vec<CouplingSpec>,
    pub drive_targets: Vec<String>,
}

impl SystemSpec {
    pub fn new(modes: Vec<ModeSpec>, couplings: Vec<CouplingSpec>, drive_targets: Vec<String>) -> Result<Self> {
        let s = Self { modes, couplings, drive_targets };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, m) in self.modes.iter().enumerate() {
            let path = |f: &str| format!("mode[{i}].{f}");
            if self.modes[..i].iter().any(|o| o.label == m.label) {
                return Err(Error::schema(path("label"), format!("duplicate label `{}`", m.label)));
            }
            if m.dim < 2 {
                return Err(Error::schema(path("dim"), "dimension must be at least 2"));
            }
            if m.kind == ModeKind::Qubit && m.dim != 2 {
                return Err(Error::schema(path("dim"), "qubits are two-level"));
            }
            if m.kind == ModeKind::Qubit && m.self_kerr != 0.0 {
                return Err(Error::schema(path("self_kerr_MHz"), "qubits carry no self-Kerr; use anharmonicity_MHz"));
            }
            if !(m.t1 > 0.0) {
                return Err(Error::schema(path("T1_us"), "time constant must be positive"));
            }
            if !(m.t2 > 0.0) {
                return Err(Error::schema(path("T2_us"), "time constant must be positive"));
            }
            if m.t2 > 2.0 * m.t1 + 1e-12 {
                return Err(Error::schema(path("T2_us"), "T2 exceeds 2*T1"));
            }
        }
        for (i, c) in self.couplings.iter().enumerate() {
            for (f, l) in [("a", &c.mode_a), ("b", &c.mode_b)] {
                if self.mode_index(l).is_none() {
                    return Err(Error::schema(format!("coupling[{i}].{f}"), format!("unknown mode `{l}`")));
                }
            }
            if c.mode_a == c.mode_b {
                return Err(Error::schema(format!("coupling[{i}]"), "a coupling needs two distinct modes"));
            }
        }
        for (i, t) in self.drive_targets.iter().enumerate() {
            if self.mode_index(t).is_none() {
                return Err(Error::schema(format!("drives.targets[{i}]"), format!("unknown mode `{t}`")));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.dim).product()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.modes.iter().map(|m| m.label.as_str()).collect()
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    pub fn mode(&self, label: &str) -> Result<&ModeSpec> {
        self.modes
            .iter()
            .find(|m| m.label == label)
            .ok_or_else(|| Error::Missing(format!("mode `{label}`")))
    }

    /// Order-independent cross-Kerr lookup; 0 when no coupling is listed.
    pub fn chi(&self, a: &str, b: &str) -> f64 {
        self.couplings
            .iter()
            .filter(|c| (c.mode_a == a && c.mode_b == b) || (c.mode_a == b && c.mode_b == a))
            .map(|c| c.chi)
            .sum()
    }

    /// Restrict to the given modes (kept in this system's order) and set the drive targets.
    pub fn subsystem(&self, labels: &[&str], drive_targets: &[&str]) -> Result<SystemSpec> {
        for l in labels.iter().chain(drive_targets) {
            self.mode(l)?;
        }
        let modes: Vec<ModeSpec> =
            self.modes.iter().filter(|m| labels.contains(&m.label.as_str())).cloned().collect();
        let couplings = self
            .couplings
            .iter()
            .filter(|c| labels.contains(&c.mode_a.as_str()) && labels.contains(&c.mode_b.as_str()))
            .cloned()
            .collect();
        let targets: Vec<String> = modes
            .iter()
            .filter(|m| drive_targets.contains(&m.label.as_str()))
            .map(|m| m.label.clone())
            .collect();
        SystemSpec::new(modes, couplings, targets)
    }

    /// Set the truncation of every cavity.
    pub fn with_cavity_dim(mut self, dim: usize) -> Result<Self> {
        for m in &mut self.modes {
            if m.kind == ModeKind::Cavity {
                m.dim = dim;
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn with_mode_dim(mut self, label: &str, dim: usize) -> Result<Self> {
        let idx = self.mode_index(label).ok_or_else(|| Error::Missing(format!("mode `{label}`")))?;
        self.modes[idx].dim = dim;
        self.validate()?;
        Ok(self)
    }

    pub fn with_t2(mut self, label: &str, t2: f64) -> Result<Self> {
        let idx = self.mode_index(label).ok_or_else(|| Error::Missing(format!("mode `{label}`")))?;
        self.modes[idx].t2 = t2;
        self.validate()?;
        Ok(self)
    }
}

/// Diagonal of the static Hamiltonian, in the product basis.
pub fn static_diagonal(system: &SystemSpec) -> Vec<f64> {
    let dims = system.dims();
    let total: usize = dims.iter().product();
    let pairs: Vec<(usize, usize, f64)> = system
        .couplings
        .iter()
        .filter_map(|c| Some((system.mode_index(&c.mode_a)?, system.mode_index(&c.mode_b)?, c.chi)))
        .collect();
    let mut levels = vec![0usize; dims.len()];
    let mut diag = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        for k in (0..dims.len()).rev() {
            levels[k] = rem % dims[k];
            rem /= dims[k];
        }
        let mut e = 0.0;
        for (k, m) in system.modes.iter().enumerate() {
            if m.kind == ModeKind::Cavity && m.self_kerr != 0.0 {
                let n = levels[k] as f64;
                e -= 0.5 * m.self_kerr * n * (n - 1.0);
            }
        }
        // level index is the excitation number for both cavities and two-level qubits
        for &(a, b, chi) in &pairs {
            e -= chi * levels[a] as f64 * levels[b] as f64;
        }
        diag.push(e);
    }
    diag
}

/// Static Hamiltonian (rotating frame, rad/s).
pub fn build_static(system: &SystemSpec) -> Operator {
    let diag = static_diagonal(system);
    let m = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(diag.len(), diag.into_iter().map(C64::from)));
    Operator::hermitian(system.dims(), m).expect("diagonal real matrix is Hermitian")
}

/// Control operator with its label (e.g. `"QC_I"`).
#[derive(Debug, Clone)]
pub struct ControlOp {
    pub label: String,
    pub op: Operator,
}

/// Two Hermitian control operators (I then Q) per drive target, in drive-target order:
/// cavities get `a† + a` and `i(a† − a)`, qubits get `σ_x` and `σ_y`.
pub fn build_drive_ops(system: &SystemSpec) -> Result<Vec<ControlOp>> {
    if system.drive_targets.is_empty() {
        return Err(Error::Missing("no drive targets".into()));
    }
    let dims = system.dims();
    let mut out = Vec::with_capacity(2 * system.drive_targets.len());
    for target in &system.drive_targets {
        let idx = system.mode_index(target).ok_or_else(|| Error::Missing(format!("mode `{target}`")))?;
        let mode = &system.modes[idx];
        let (i_op, q_op) = match mode.kind {
            ModeKind::Qubit => {
                let (sx, sy, _) = hilbert::qubit_ops();
                (sx, sy)
            }
            ModeKind::Cavity => {
                let a = hilbert::annihilation(mode.dim)?.into_matrix();
                let ad = a.adjoint();
                let x = &ad + &a;
                let p = (&ad - &a) * I;
                (Operator::hermitian(vec![mode.dim], x)?, Operator::hermitian(vec![mode.dim], p)?)
            }
        };
        out.push(ControlOp { label: format!("{target}_I"), op: hilbert::embed(&i_op, &dims, idx)? });
        out.push(ControlOp { label: format!("{target}_Q"), op: hilbert::embed(&q_op, &dims, idx)? });
    }
    Ok(out)
}

/// Number operator of a mode (`a†a` or `|e⟩⟨e|`), embedded in the full system.
pub fn number_operator(system: &SystemSpec, label: &str) -> Result<Operator> {
    let idx = system.mode_index(label).ok_or_else(|| Error::Missing(format!("mode `{label}`")))?;
    let m = &system.modes[idx];
    let local = match m.kind {
        ModeKind::Cavity => hilbert::number(m.dim),
        ModeKind::Qubit => hilbert::qubit_ops().2,
    };
    hilbert::embed(&local, &system.dims(), idx)
}

//! Piecewise-constant unitary propagation and Lindblad evolution.
//!
//! A [`ControlledSystem`] is a direct sum of independent blocks, each with a static Hamiltonian
//! and the same number of control operators. The dense case is a single block; the CZ fast path
//! uses one 2×2 block per photon-number sector. Every step is exponentiated through a Hermitian
//! eigendecomposition of each block.

mod lindblad;
mod pulses;

pub use lindblad::{
    collapse_ops, lindblad_evolve, lindblad_evolve_matrix, ChannelToggle, DensityMatrix, ErrorChannelSet,
    LindbladOptions,
};
pub use pulses::PulseSet;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_drive_ops, build_static, BlockSystem, SystemSpec};
use crate::hilbert::{Operator, StateVector};
use crate::linalg::{sparse_entries, CMatrix, CVector, HermitianEigen, C64};

/// One block of a block-diagonal controlled Hamiltonian.
#[derive(Debug, Clone)]
pub struct Block {
    pub h0: CMatrix,
    pub controls: Vec<CMatrix>,
    control_entries: Vec<Vec<(usize, usize, C64)>>,
}

impl Block {
    pub fn new(h0: CMatrix, controls: Vec<CMatrix>) -> Result<Self> {
        let n = h0.nrows();
        if h0.ncols() != n || controls.iter().any(|c| c.nrows() != n || c.ncols() != n) {
            return Err(Error::DimensionMismatch("block operators must be square and equal-sized".into()));
        }
        let control_entries = controls.iter().map(sparse_entries).collect();
        Ok(Self { h0, controls, control_entries })
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    /// Nonzero entries of control `j`.
    pub fn control_entries(&self, j: usize) -> &[(usize, usize, C64)] {
        &self.control_entries[j]
    }

    pub fn hamiltonian(&self, amps: &[f64]) -> CMatrix {
        let mut h = self.h0.clone();
        for (entries, &e) in self.control_entries.iter().zip(amps) {
            if e != 0.0 {
                for &(r, c, v) in entries {
                    h[(r, c)] += v * e;
                }
            }
        }
        h
    }
}

/// Static Hamiltonian plus labelled controls, as a direct sum of blocks.
#[derive(Debug, Clone)]
pub struct ControlledSystem {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    dim: usize,
    labels: Vec<String>,
}

impl ControlledSystem {
    pub fn from_blocks(blocks: Vec<Block>, labels: Vec<String>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::DimensionMismatch("no blocks".into()));
        }
        if blocks.iter().any(|b| b.controls.len() != labels.len()) {
            return Err(Error::DimensionMismatch("every block needs one operator per control label".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut dim = 0;
        for b in &blocks {
            offsets.push(dim);
            dim += b.dim();
        }
        Ok(Self { blocks, offsets, dim, labels })
    }

    /// Dense single-block system.
    pub fn dense(h0: &Operator, controls: &[Operator], labels: Vec<String>) -> Result<Self> {
        if controls.len() != labels.len() {
            return Err(Error::DimensionMismatch("one label per control".into()));
        }
        for c in controls {
            if c.dims() != h0.dims() {
                return Err(Error::DimensionMismatch(format!("control dims {:?} vs H0 {:?}", c.dims(), h0.dims())));
            }
        }
        let block = Block::new(h0.matrix().clone(), controls.iter().map(|c| c.matrix().clone()).collect())?;
        Self::from_blocks(vec![block], labels)
    }

    /// Static Hamiltonian and drive operators of a system description.
    pub fn from_system(system: &SystemSpec) -> Result<Self> {
        let h0 = build_static(system);
        let ops = build_drive_ops(system)?;
        let labels = ops.iter().map(|c| c.label.clone()).collect();
        let controls: Vec<Operator> = ops.into_iter().map(|c| c.op).collect();
        Self::dense(&h0, &controls, labels)
    }

    /// Nine 2×2 sector blocks driven by the coupler I/Q controls.
    pub fn from_block_system(bs: &BlockSystem) -> Result<Self> {
        let blocks = (0..bs.sectors.len())
            .map(|k| Block::new(bs.static_block(k), BlockSystem::control_blocks().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_blocks(blocks, vec![format!("{}_I", bs.coupler), format!("{}_Q", bs.coupler)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_controls(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Full (block-diagonal) static Hamiltonian.
    pub fn static_matrix(&self) -> CMatrix {
        self.assemble(|b| b.h0.clone())
    }

    /// Full (block-diagonal) operator of control `j`.
    pub fn control_matrix(&self, j: usize) -> CMatrix {
        self.assemble(|b| b.controls[j].clone())
    }

    fn assemble(&self, f: impl Fn(&Block) -> CMatrix) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (b, &o) in self.blocks.iter().zip(&self.offsets) {
            let n = b.dim();
            m.view_mut((o, o), (n, n)).copy_from(&f(b));
        }
        m
    }

    /// Check that `pulses` drive exactly this system's controls, in order.
    pub fn check_pulses(&self, pulses: &PulseSet) -> Result<()> {
        if pulses.labels() != self.labels.as_slice() {
            return Err(Error::DimensionMismatch(format!(
                "pulse labels {:?} do not match controls {:?}",
                pulses.labels(),
                self.labels
            )));
        }
        Ok(())
    }

    /// Eigendecomposition of every block at the given control amplitudes.
    pub fn step_eigen(&self, amps: &[f64]) -> Vec<HermitianEigen> {
        self.blocks.iter().map(|b| HermitianEigen::new(&b.hamiltonian(amps))).collect()
    }

    /// Apply `exp(-i H dt)` (given by its block eigendecompositions) to a vector in place.
    pub fn apply_step(&self, eig: &[HermitianEigen], dt: f64, v: &mut CVector) {
        self.apply_spectral(eig, v, |l| C64::from_polar(1.0, -l * dt));
    }

    /// Apply `exp(+i H dt)`.
    pub fn apply_step_adjoint(&self, eig: &[HermitianEigen], dt: f64, v: &mut CVector) {
        self.apply_spectral(eig, v, |l| C64::from_polar(1.0, l * dt));
    }

    fn apply_spectral(&self, eig: &[HermitianEigen], v: &mut CVector, f: impl Fn(f64) -> C64) {
        for (e, &o) in eig.iter().zip(&self.offsets) {
            let n = e.dim();
            let mut seg = v.rows_mut(o, n);
            let mut w = e.vectors.ad_mul(&seg);
            for (i, x) in w.iter_mut().enumerate() {
                *x *= f(e.values[i]);
            }
            seg.copy_from(&(&e.vectors * w));
        }
    }

    /// `U(T) = ∏ exp(−i H_k dt)` as a full block-diagonal matrix.
    pub fn propagator(&self, pulses: &PulseSet) -> Result<CMatrix> {
        self.check_pulses(pulses)?;
        let dt = pulses.dt();
        let mut block_u: Vec<CMatrix> = self.blocks.iter().map(|b| CMatrix::identity(b.dim(), b.dim())).collect();
        for k in 0..pulses.n_steps() {
            let amps = pulses.step(k);
            for (b, u) in self.blocks.iter().zip(block_u.iter_mut()) {
                *u = HermitianEigen::new(&b.hamiltonian(&amps)).propagator(dt) * &*u;
            }
        }
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (u, &o) in block_u.iter().zip(&self.offsets) {
            m.view_mut((o, o), u.shape()).copy_from(u);
        }
        Ok(m)
    }

    /// Final state, or the state after every step when `trajectory` is set (first entry = ψ0).
    pub fn evolve(&self, pulses: &PulseSet, psi0: &CVector, trajectory: bool) -> Result<Vec<CVector>> {
        self.check_pulses(pulses)?;
        if psi0.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("state of length {} vs system {}", psi0.len(), self.dim)));
        }
        let mut out = Vec::new();
        let mut v = psi0.clone();
        if trajectory {
            out.push(v.clone());
        }
        for k in 0..pulses.n_steps() {
            let eig = self.step_eigen(&pulses.step(k));
            self.apply_step(&eig, pulses.dt(), &mut v);
            if trajectory {
                out.push(v.clone());
            }
        }
        if !trajectory {
            out.push(v);
        }
        Ok(out)
    }
}

/// `U(T)` for `H(t) = H0 + Σ_j ε_j(t) C_j` with piecewise-constant ε.
pub fn propagator(h0: &Operator, controls: &[Operator], pulses: &PulseSet) -> Result<Operator> {
    if controls.len() != pulses.n_controls() {
        return Err(Error::DimensionMismatch(format!(
            "{} controls for {} amplitude arrays",
            controls.len(),
            pulses.n_controls()
        )));
    }
    let sys = ControlledSystem::dense(h0, controls, pulses.labels().to_vec())?;
    Operator::new(h0.dims().to_vec(), sys.propagator(pulses)?)
}

/// Propagate a state; returns the whole trajectory (ψ0 first) or just the final state.
pub fn propagate_state(
    h0: &Operator,
    controls: &[Operator],
    pulses: &PulseSet,
    psi0: &StateVector,
    trajectory: bool,
) -> Result<Vec<StateVector>> {
    if controls.len() != pulses.n_controls() {
        return Err(Error::DimensionMismatch("controls vs amplitude arrays".into()));
    }
    if psi0.dims() != h0.dims() {
        return Err(Error::DimensionMismatch(format!("state dims {:?} vs H0 {:?}", psi0.dims(), h0.dims())));
    }
    let sys = ControlledSystem::dense(h0, controls, pulses.labels().to_vec())?;
    sys.evolve(pulses, psi0.amplitudes(), trajectory)?
        .into_iter()
        .map(|v| StateVector::new(h0.dims().to_vec(), v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{qubit_ops, qubit_state, LogicalLabel};
    use crate::linalg::{max_abs_diff, unitarity_defect, I};
    use std::f64::consts::PI;

    fn qubit_system() -> (Operator, Vec<Operator>) {
        let (sx, sy, _) = qubit_ops();
        (Operator::zeros(vec![2]), vec![sx, sy])
    }

    fn labels() -> Vec<String> {
        vec!["q_I".into(), "q_Q".into()]
    }

    #[test]
    fn zero_pulses_give_identity() {
        let (h0, c) = qubit_system();
        let p = PulseSet::zeros(1e-9, labels(), 10).unwrap();
        let u = propagator(&h0, &c, &p).unwrap();
        assert!(max_abs_diff(u.matrix(), &CMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn rabi_pi_and_two_pi() {
        let (h0, c) = qubit_system();
        // H = (Ω/2) σ_x, T = π/Ω
        let omega = 2.0 * PI * 5e6;
        let n = 40;
        let t = PI / omega;
        let p = PulseSet::new(t / n as f64, labels(), vec![vec![omega / 2.0; n], vec![0.0; n]]).unwrap();
        let out = propagate_state(&h0, &c, &p, &qubit_state(LogicalLabel::G), false).unwrap();
        let psi = out[0].amplitudes();
        assert!((psi[1] - (-I)).norm() < 1e-12);
        assert!(psi[0].norm() < 1e-12);

        let p2 = p.concat(&p).unwrap();
        let u = propagator(&h0, &c, &p2).unwrap();
        assert!(max_abs_diff(u.matrix(), &(-CMatrix::identity(2, 2))) < 1e-12);
        assert!(unitarity_defect(u.matrix()) < 1e-12);
    }

    #[test]
    fn trajectory_has_every_step() {
        let (h0, c) = qubit_system();
        let p = PulseSet::new(1e-9, labels(), vec![vec![1e7; 5], vec![-3e6; 5]]).unwrap();
        let traj = propagate_state(&h0, &c, &p, &qubit_state(LogicalLabel::G), true).unwrap();
        assert_eq!(traj.len(), 6);
        for s in traj {
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn label_mismatch_is_rejected() {
        let (h0, c) = qubit_system();
        let sys = ControlledSystem::dense(&h0, &c, labels()).unwrap();
        let p = PulseSet::zeros(1e-9, vec!["x".into(), "y".into()], 3).unwrap();
        assert!(sys.propagator(&p).is_err());
        let p1 = PulseSet::zeros(1e-9, vec!["x".into()], 3).unwrap();
        assert!(propagator(&h0, &c, &p1).is_err());
    }
}

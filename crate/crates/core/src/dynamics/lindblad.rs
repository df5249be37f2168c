//! Lindblad master equation with piecewise-constant controls.
//!
//! `dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ_k L_k ρ L_k†` with `H_eff = H − (i/2) Σ_k L_k† L_k`,
//! integrated by fixed-step RK4. Operators are applied as sparse triplet lists, so the cost per
//! derivative is `O(nnz · d)` rather than `O(d³)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PulseSet;
use crate::error::{Error, Result};
use crate::hamiltonian::{ModeKind, SystemSpec};
use crate::hilbert::{self, Operator, StateVector};
use crate::linalg::{hermiticity_defect, sparse_entries, trace, CMatrix, HermitianEigen, C64, I};

/// Dense density matrix; Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(dims, matrix, 1e-10)
    }

    /// Validate with a custom tolerance for trace, Hermiticity and the smallest eigenvalue.
    pub fn with_tolerance(dims: Vec<usize>, matrix: CMatrix, tol: f64) -> Result<Self> {
        let n: usize = dims.iter().product();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix for dims {dims:?}", matrix.nrows(), matrix.ncols())));
        }
        if hermiticity_defect(&matrix) > tol {
            return Err(Error::Unphysical("density matrix is not Hermitian".into()));
        }
        let tr = trace(&matrix);
        if (tr - C64::from(1.0)).norm() > tol.max(1e-12) {
            return Err(Error::Unphysical(format!("density matrix trace {tr}")));
        }
        let min = HermitianEigen::new(&crate::linalg::hermitian_part(&matrix)).values.min();
        if min < -tol {
            return Err(Error::Unphysical(format!("density matrix eigenvalue {min:e}")));
        }
        Ok(Self { dims, matrix })
    }

    pub fn from_state(state: &StateVector) -> Self {
        let psi = state.amplitudes();
        Self { dims: state.dims().to_vec(), matrix: psi * psi.adjoint() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        trace(&self.matrix).re
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_to(&self, state: &StateVector) -> f64 {
        let psi = state.amplitudes();
        psi.dotc(&(&self.matrix * psi)).re
    }

    pub fn purity(&self) -> f64 {
        crate::linalg::trace_product(&self.matrix, &self.matrix).re
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelToggle {
    pub relaxation: bool,
    pub dephasing: bool,
}

/// Per-mode relaxation and pure-dephasing switches.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorChannelSet {
    toggles: BTreeMap<String, ChannelToggle>,
}

impl ErrorChannelSet {
    pub fn none() -> Self {
        Self::default()
    }

    /// Every channel of every mode switched on.
    pub fn all(system: &SystemSpec) -> Self {
        let mut s = Self::none();
        for m in &system.modes {
            s.set(&m.label, ChannelToggle { relaxation: true, dephasing: true });
        }
        s
    }

    pub fn only(label: &str, relaxation: bool, dephasing: bool) -> Self {
        let mut s = Self::none();
        s.set(label, ChannelToggle { relaxation, dephasing });
        s
    }

    pub fn set(&mut self, label: &str, toggle: ChannelToggle) {
        self.toggles.insert(label.to_string(), toggle);
    }

    pub fn get(&self, label: &str) -> ChannelToggle {
        self.toggles.get(label).copied().unwrap_or_default()
    }

    /// Keep only the toggles of modes present in `system`.
    pub fn restricted_to(&self, system: &SystemSpec) -> Self {
        let toggles = self.toggles.iter().filter(|(l, _)| system.mode_index(l).is_some()).map(|(l, t)| (l.clone(), *t)).collect();
        Self { toggles }
    }

    pub fn is_empty(&self) -> bool {
        self.toggles.values().all(|t| !t.relaxation && !t.dephasing)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.toggles.keys().map(String::as_str)
    }
}

/// Collapse operators for the enabled channels, embedded in the full system.
///
/// Relaxation: `√(1/T1) a` or `√(1/T1) σ⁻`. Pure dephasing with `1/Tφ = 1/T2 − 1/(2T1)`:
/// `√(2/Tφ) n̂` for cavities, `√(1/(2Tφ)) σ_z` for qubits.
pub fn collapse_ops(system: &SystemSpec, channels: &ErrorChannelSet) -> Result<Vec<Operator>> {
    for label in channels.labels() {
        system.mode(label)?;
    }
    let dims = system.dims();
    let mut out = Vec::new();
    for (idx, m) in system.modes.iter().enumerate() {
        let t = channels.get(&m.label);
        if t.relaxation {
            let lower = match m.kind {
                ModeKind::Cavity => hilbert::annihilation(m.dim)?,
                ModeKind::Qubit => hilbert::sigma_minus(),
            };
            let l = Operator::new(vec![m.dim], lower.into_matrix() * C64::from((1.0 / m.t1).sqrt()))?;
            out.push(hilbert::embed(&l, &dims, idx)?);
        }
        if t.dephasing {
            let gamma_phi = 1.0 / m.t2 - 0.5 / m.t1;
            if gamma_phi < -1e-12 * (1.0 / m.t2) {
                return Err(Error::Unphysical(format!("mode `{}` has T2 > 2 T1", m.label)));
            }
            if gamma_phi <= 0.0 {
                continue;
            }
            let (op, rate) = match m.kind {
                ModeKind::Cavity => (hilbert::number(m.dim), 2.0 * gamma_phi),
                ModeKind::Qubit => (hilbert::sigma_z(), 0.5 * gamma_phi),
            };
            let l = Operator::new(vec![m.dim], op.into_matrix() * C64::from(rate.sqrt()))?;
            out.push(hilbert::embed(&l, &dims, idx)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct LindbladOptions {
    /// Upper bound on `dt_sub · ‖H_eff‖`.
    pub max_step_norm: f64,
    /// Largest tolerated drift of the trace over a run.
    pub trace_tolerance: f64,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        Self { max_step_norm: 0.05, trace_tolerance: 1e-6 }
    }
}

type Triplets = Vec<(usize, usize, C64)>;

/// `out += s · M ρ` on column-major `n × n` buffers.
fn add_left(out: &mut [C64], m: &Triplets, rho: &[C64], n: usize, s: C64) {
    let scaled: Vec<(usize, usize, C64)> = m.iter().map(|&(r, c, v)| (r, c, s * v)).collect();
    for (dst, col) in out.chunks_exact_mut(n).zip(rho.chunks_exact(n)) {
        for &(r, c, v) in &scaled {
            dst[r] += v * col[c];
        }
    }
}

/// `out += s · ρ M†`: column `b` of the result gathers `conj(M_bc)` times column `c` of ρ.
fn add_right_adjoint(out: &mut [C64], m: &Triplets, rho: &[C64], n: usize, s: C64) {
    for &(b, c, v) in m {
        let f = s * v.conj();
        let src = &rho[c * n..(c + 1) * n];
        for (d, x) in out[b * n..(b + 1) * n].iter_mut().zip(src) {
            *d += f * x;
        }
    }
}

/// Generator split into an elementwise part (diagonal Hamiltonian and diagonal jumps) and sparse
/// off-diagonal terms.
struct Liouvillian<'a> {
    n: usize,
    /// `F_ij` with `(𝓛ρ)_ij ⊇ F_ij ρ_ij`.
    factors: Vec<C64>,
    /// Off-diagonal entries of `H_eff`.
    heff: Triplets,
    jumps: &'a [Triplets],
    scratch: Vec<C64>,
}

impl Liouvillian<'_> {
    fn apply(&mut self, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        for ((o, r), f) in out.iter_mut().zip(rho).zip(&self.factors) {
            *o = f * r;
        }
        add_left(out, &self.heff, rho, n, -I);
        add_right_adjoint(out, &self.heff, rho, n, I);
        for l in self.jumps {
            self.scratch.fill(C64::from(0.0));
            add_left(&mut self.scratch, l, rho, n, C64::from(1.0));
            add_right_adjoint(out, l, &self.scratch, n, C64::from(1.0));
        }
    }
}

fn row_sum_norm(t: &Triplets, n: usize) -> f64 {
    let mut rows = vec![0.0; n];
    for &(r, _, v) in t {
        rows[r] += v.norm();
    }
    rows.into_iter().fold(0.0, f64::max)
}

fn buffer_trace(rho: &[C64], n: usize) -> C64 {
    (0..n).map(|i| rho[i * n + i]).sum()
}

/// `dst = a + s · b`.
fn axpy_into(dst: &mut [C64], a: &[C64], s: C64, b: &[C64]) {
    for ((d, x), y) in dst.iter_mut().zip(a).zip(b) {
        *d = x + s * y;
    }
}

/// Evolve an arbitrary operator (not necessarily a state) under the Lindblad generator.
pub fn lindblad_evolve_matrix(
    h0: &CMatrix,
    controls: &[CMatrix],
    pulses: &PulseSet,
    collapse: &[CMatrix],
    rho0: &CMatrix,
    options: &LindbladOptions,
) -> Result<CMatrix> {
    let n = h0.nrows();
    if controls.len() != pulses.n_controls() {
        return Err(Error::DimensionMismatch("controls vs amplitude arrays".into()));
    }
    if rho0.nrows() != n || rho0.ncols() != n || controls.iter().chain(collapse).any(|m| m.nrows() != n) {
        return Err(Error::DimensionMismatch("Lindblad operators of unequal size".into()));
    }
    let mut damping = CMatrix::zeros(n, n);
    for l in collapse {
        damping += l.adjoint() * l;
    }
    let static_eff = h0 - damping * (I * 0.5);
    let control_entries: Vec<Triplets> = controls.iter().map(sparse_entries).collect();
    let all_jumps: Vec<Triplets> = collapse.iter().map(sparse_entries).collect();
    let jump_norm: f64 = all_jumps.iter().map(|l| row_sum_norm(l, n).powi(2)).sum();
    // diagonal jumps contribute l_i conj(l_j) ρ_ij
    let mut jump_factors = vec![C64::from(0.0); n * n];
    let mut jumps = Vec::new();
    for l in all_jumps {
        if l.iter().all(|&(r, c, _)| r == c) {
            let mut d = vec![C64::from(0.0); n];
            for &(r, _, v) in &l {
                d[r] = v;
            }
            for j in 0..n {
                for i in 0..n {
                    jump_factors[j * n + i] += d[i] * d[j].conj();
                }
            }
        } else {
            jumps.push(l);
        }
    }

    let tr0 = trace(rho0);
    let mut rho: Vec<C64> = rho0.as_slice().to_vec();
    let mut k1 = vec![C64::from(0.0); n * n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let mut lv = Liouvillian { n, factors: k1.clone(), heff: Vec::new(), jumps: &jumps, scratch: k1.clone() };
    let dt = pulses.dt();
    for step in 0..pulses.n_steps() {
        let mut h = static_eff.clone();
        for (entries, e) in control_entries.iter().zip(pulses.step(step)) {
            for &(r, c, v) in entries {
                h[(r, c)] += v * e;
            }
        }
        let entries = sparse_entries(&h);
        let norm = row_sum_norm(&entries, n) + jump_norm;
        let diag: Vec<C64> = (0..n).map(|i| h[(i, i)]).collect();
        for j in 0..n {
            for i in 0..n {
                lv.factors[j * n + i] = -I * (diag[i] - diag[j].conj()) + jump_factors[j * n + i];
            }
        }
        lv.heff = entries.into_iter().filter(|&(r, c, _)| r != c).collect();
        let n_sub = ((dt * norm / options.max_step_norm).ceil() as usize).max(1);
        let h_sub = dt / n_sub as f64;
        let half = C64::from(0.5 * h_sub);
        let full = C64::from(h_sub);
        let sixth = h_sub / 6.0;
        for _ in 0..n_sub {
            lv.apply(&rho, &mut k1);
            axpy_into(&mut tmp, &rho, half, &k1);
            lv.apply(&tmp, &mut k2);
            axpy_into(&mut tmp, &rho, half, &k2);
            lv.apply(&tmp, &mut k3);
            axpy_into(&mut tmp, &rho, full, &k3);
            lv.apply(&tmp, &mut k4);
            for i in 0..n * n {
                rho[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth;
            }
        }
        let drift = (buffer_trace(&rho, n) - tr0).norm();
        if drift > options.trace_tolerance || !drift.is_finite() {
            return Err(Error::Integration(format!(
                "trace drift {drift:e} after step {step}; reduce max_step_norm (dt_sub = {h_sub:e} s)"
            )));
        }
    }
    Ok(CMatrix::from_vec(n, n, rho))
}

/// Evolve a density matrix; the result is checked to within `1e-8` and Hermitian-symmetrised.
pub fn lindblad_evolve(
    h0: &Operator,
    controls: &[Operator],
    pulses: &PulseSet,
    collapse: &[Operator],
    rho0: &DensityMatrix,
) -> Result<DensityMatrix> {
    for op in controls.iter().chain(collapse) {
        if op.dims() != h0.dims() {
            return Err(Error::DimensionMismatch(format!("operator dims {:?} vs H0 {:?}", op.dims(), h0.dims())));
        }
    }
    if rho0.dims() != h0.dims() {
        return Err(Error::DimensionMismatch(format!("state dims {:?} vs H0 {:?}", rho0.dims(), h0.dims())));
    }
    let c: Vec<CMatrix> = controls.iter().map(|o| o.matrix().clone()).collect();
    let l: Vec<CMatrix> = collapse.iter().map(|o| o.matrix().clone()).collect();
    let rho = lindblad_evolve_matrix(h0.matrix(), &c, pulses, &l, rho0.matrix(), &LindbladOptions::default())?;
    let rho = crate::linalg::hermitian_part(&rho);
    DensityMatrix::with_tolerance(h0.dims().to_vec(), rho, 1e-8)
        .map_err(|e| Error::Integration(format!("evolved state failed validation: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{CouplingSpec, ModeSpec};
    use crate::hilbert::{fock_state, qubit_ops};

    fn mode(label: &str, kind: ModeKind, dim: usize, t1: f64, t2: f64) -> ModeSpec {
        ModeSpec { label: label.into(), kind, dim, frequency: 0.0, self_kerr: 0.0, anharmonicity: None, t1, t2 }
    }

    #[test]
    fn dephasing_rate_formula() {
        let sys = crate::hamiltonian::paper_profile();
        let ops = collapse_ops(&sys, &ErrorChannelSet::only("S2", false, true)).unwrap();
        assert_eq!(ops.len(), 1);
        let n_dim = sys.mode("S2").unwrap().dim;
        let local = crate::hilbert::partial_trace(&(ops[0].matrix().adjoint() * ops[0].matrix()), &sys.dims(), &[3])
            .unwrap();
        let spectators = (sys.total_dim() / n_dim) as f64;
        let gamma_phi = 1.0 / 219e-6 - 1.0 / 2102e-6;
        // L†L = (2/Tφ) n̂² on the mode
        assert!((local[(1, 1)].re / spectators - 2.0 * gamma_phi).abs() / gamma_phi < 1e-9);
        assert!(collapse_ops(&sys, &ErrorChannelSet::none()).unwrap().is_empty());
    }

    #[test]
    fn qubit_relaxation_rate() {
        let sys = SystemSpec::new(vec![mode("Q", ModeKind::Qubit, 2, 100e-6, 100e-6)], vec![], vec!["Q".into()]).unwrap();
        let ops = collapse_ops(&sys, &ErrorChannelSet::only("Q", true, false)).unwrap();
        let ltl = ops[0].matrix().adjoint() * ops[0].matrix();
        assert!((ltl[(1, 1)].re - 1e4).abs() < 1e-6);
        assert!(collapse_ops(&sys, &ErrorChannelSet::only("X", true, false)).is_err());
    }

    #[test]
    fn unphysical_t2_is_rejected() {
        let mut sys = SystemSpec::new(vec![mode("Q", ModeKind::Qubit, 2, 1e-6, 1e-6)], vec![], vec![]).unwrap();
        sys.modes[0].t2 = 3e-6;
        assert!(collapse_ops(&sys, &ErrorChannelSet::only("Q", false, true)).is_err());
    }

    #[test]
    fn t1_decay() {
        let sys = SystemSpec::new(vec![mode("Q", ModeKind::Qubit, 2, 10e-6, 20e-6)], vec![], vec!["Q".into()]).unwrap();
        let (sx, sy, _) = qubit_ops();
        let ops = collapse_ops(&sys, &ErrorChannelSet::only("Q", true, false)).unwrap();
        let t = 5e-6;
        let pulses = PulseSet::zeros(t / 50.0, vec!["a".into(), "b".into()], 50).unwrap();
        let rho0 = DensityMatrix::from_state(&fock_state(2, 1).unwrap());
        let rho = lindblad_evolve(&Operator::zeros(vec![2]), &[sx, sy], &pulses, &ops, &rho0).unwrap();
        assert!((rho.matrix()[(1, 1)].re - (-t / 10e-6f64).exp()).abs() < 1e-9);
        assert!((rho.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cavity_dephasing_of_fock_coherence() {
        let sys = SystemSpec::new(vec![mode("S", ModeKind::Cavity, 3, 1e-3, 100e-6)], vec![], vec![]).unwrap();
        let ops = collapse_ops(&sys, &ErrorChannelSet::only("S", false, true)).unwrap();
        let t_phi = 1.0 / (1.0 / 100e-6 - 0.5 / 1e-3);
        let t = 10e-6;
        let psi = fock_state(3, 0).unwrap().add(&fock_state(3, 2).unwrap()).unwrap().normalized();
        // a zero control fixes the time grid
        let dummy = Operator::zeros(vec![3]);
        let p = PulseSet::zeros(t / 20.0, vec!["d".into()], 20).unwrap();
        let rho = lindblad_evolve(&Operator::zeros(vec![3]), &[dummy], &p, &ops, &DensityMatrix::from_state(&psi)).unwrap();
        // ⟨0|ρ|2⟩ decays as exp(−(2−0)² t / Tφ); populations unchanged
        let expected = 0.5 * (-4.0 * t / t_phi).exp();
        assert!((rho.matrix()[(0, 2)].re - expected).abs() < 1e-9);
        assert!((rho.matrix()[(2, 2)].re - 0.5).abs() < 1e-12);
        // Ramsey on {0,1} reproduces 1/T2
        let psi01 = fock_state(3, 0).unwrap().add(&fock_state(3, 1).unwrap()).unwrap().normalized();
        let rho = lindblad_evolve(
            &Operator::zeros(vec![3]),
            &[Operator::zeros(vec![3])],
            &p,
            &ops,
            &DensityMatrix::from_state(&psi01),
        )
        .unwrap();
        let t2_pure = 1.0 / t_phi;
        assert!((rho.matrix()[(0, 1)].re - 0.5 * (-t * t2_pure).exp()).abs() < 1e-9);
    }

    #[test]
    fn closed_system_matches_unitary() {
        let modes = vec![mode("S", ModeKind::Cavity, 4, 1e-3, 1e-3), mode("Q", ModeKind::Qubit, 2, 1e-4, 1e-4)];
        let couplings = vec![CouplingSpec { mode_a: "S".into(), mode_b: "Q".into(), chi: 2e7 }];
        let sys = SystemSpec::new(modes, couplings, vec!["Q".into(), "S".into()]).unwrap();
        let cs = super::super::ControlledSystem::from_system(&sys).unwrap();
        let n = 30;
        let amps = (0..4).map(|j| (0..n).map(|k| 1e7 * ((k * (j + 1)) as f64 * 0.3).sin()).collect()).collect();
        let p = PulseSet::new(2e-9, cs.labels().to_vec(), amps).unwrap();
        let u = cs.propagator(&p).unwrap();
        let psi = fock_state(4, 1).unwrap().tensor(&crate::hilbert::qubit_state(crate::hilbert::LogicalLabel::Plus));
        let rho0 = DensityMatrix::from_state(&psi);
        let controls: Vec<CMatrix> = (0..4).map(|j| cs.control_matrix(j)).collect();
        let rho =
            lindblad_evolve_matrix(&cs.static_matrix(), &controls, &p, &[], rho0.matrix(), &LindbladOptions::default())
                .unwrap();
        let out = StateVector::new(vec![4, 2], &u * psi.amplitudes()).unwrap();
        let f = out.amplitudes().dotc(&(&rho * out.amplitudes())).re;
        assert!(f > 1.0 - 1e-9, "{f}");
    }
}

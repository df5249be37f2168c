//! GRAPE with exact gradients.
//!
//! The objective for weighted constraint pairs `(|i_k⟩, |t_k⟩, w_k)` is
//!
//! ```text
//! C = 1 − |Σ_k w_k ⟨t_k|U(T)|i_k⟩|² / (Σ_k w_k)² + λ_amp Σ ε² dt + λ_smooth Σ (Δε)²
//! ```
//!
//! The gradient of each step propagator comes from the step's eigendecomposition
//! `H = V diag(λ) V†`: `∂U/∂ε_j = V (G ∘ V† C_j V) V†` with `G_ab` the divided difference of
//! `exp(−iλ dt)`. One backward sweep carries both the forward states (recovered by inverting each
//! step) and the costates, so memory stays `O(#pairs · dim)`.

mod baseline;
mod constraints;

pub use baseline::{selective_baseline, PulseShape};
pub use constraints::{
    cz_constraints, cz_logical_basis, decode_constraints, encode_constraints, encode_single_constraints,
    hadamard_constraints, ideal_cz, ideal_encode, ideal_hadamard, logical_ry_half_pi, ConstraintKind, ConstraintPair,
    ConstraintSet, CZ_LABELS,
};

use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlledSystem, PulseSet};
use crate::error::{Error, Result};
use crate::hamiltonian::BlockSystem;
use crate::linalg::{exp_divided_difference, CMatrix, CVector, HermitianEigen, C64};
use crate::optim::{minimize, Method, MinimizeOptions, Status};
use crate::units::mhz_to_rad;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrapeConfig {
    pub max_iters: usize,
    pub method: Method,
    /// Stop when an accepted step lowers the cost by less than this.
    pub convergence_tol: f64,
    /// Stop once the cost falls below this value.
    pub target_cost: Option<f64>,
    /// Amplitude bound (rad/s).
    pub amp_max: f64,
    pub lambda_amp: f64,
    pub lambda_smooth: f64,
    /// First trial step as a fraction of `amp_max`.
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            max_iters: 300,
            method: Method::Lbfgs,
            convergence_tol: 1e-12,
            target_cost: None,
            amp_max: mhz_to_rad(20.0),
            lambda_amp: 0.0,
            lambda_smooth: 0.0,
            initial_step: 0.05,
            seed: 1,
        }
    }
}

impl GrapeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.amp_max > 0.0) {
            return Err(Error::schema("amp_max", "must be positive"));
        }
        if self.lambda_amp < 0.0 || self.lambda_smooth < 0.0 {
            return Err(Error::schema("lambda", "penalties must be non-negative"));
        }
        Ok(())
    }
}

/// Regularisation weights.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Penalties {
    pub amp: f64,
    pub smooth: f64,
}

impl From<&GrapeConfig> for Penalties {
    fn from(c: &GrapeConfig) -> Self {
        Self { amp: c.lambda_amp, smooth: c.lambda_smooth }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: f64,
    /// `1 − |S|²/W²` without penalties.
    pub infidelity: f64,
    /// `∂C/∂ε`, shaped like the pulse amplitudes.
    pub gradient: Vec<Vec<f64>>,
}

/// Constraint pairs expressed in the basis of a [`ControlledSystem`].
#[derive(Debug, Clone)]
pub struct GrapeProblem {
    system: ControlledSystem,
    initial: Vec<CVector>,
    target: Vec<CVector>,
    weights: Vec<f64>,
    labels: Vec<String>,
}

impl GrapeProblem {
    /// Constraint states used as-is; their dimension must match the system.
    pub fn new(system: ControlledSystem, constraints: &ConstraintSet) -> Result<Self> {
        let initial = constraints.pairs.iter().map(|p| p.initial.amplitudes().clone()).collect();
        let target = constraints.pairs.iter().map(|p| p.target.amplitudes().clone()).collect();
        Self::from_vectors(system, initial, target, constraints)
    }

    /// Constraint states restricted to the photon-number sectors of `blocks`.
    pub fn on_blocks(blocks: &BlockSystem, constraints: &ConstraintSet) -> Result<Self> {
        let system = ControlledSystem::from_block_system(blocks)?;
        let initial = constraints.pairs.iter().map(|p| blocks.restrict(&p.initial)).collect::<Result<_>>()?;
        let target = constraints.pairs.iter().map(|p| blocks.restrict(&p.target)).collect::<Result<_>>()?;
        Self::from_vectors(system, initial, target, constraints)
    }

    fn from_vectors(
        system: ControlledSystem,
        initial: Vec<CVector>,
        target: Vec<CVector>,
        constraints: &ConstraintSet,
    ) -> Result<Self> {
        if initial.iter().chain(&target).any(|v| v.len() != system.dim()) {
            return Err(Error::DimensionMismatch(format!(
                "constraint states do not match system dimension {}",
                system.dim()
            )));
        }
        Ok(Self {
            system,
            initial,
            target,
            weights: constraints.pairs.iter().map(|p| p.weight).collect(),
            labels: constraints.pairs.iter().map(|p| p.label.clone()).collect(),
        })
    }

    pub fn system(&self) -> &ControlledSystem {
        &self.system
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.initial.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    /// Multiply every target by `e^{iθ}`.
    pub fn with_target_phase(mut self, theta: f64) -> Self {
        let ph = C64::from_polar(1.0, theta);
        for t in &mut self.target {
            *t *= ph;
        }
        self
    }

    /// `⟨t_k|U(T)|i_k⟩` for every pair.
    pub fn overlaps(&self, pulses: &PulseSet) -> Result<Vec<C64>> {
        self.system.check_pulses(pulses)?;
        let mut states = self.initial.clone();
        for k in 0..pulses.n_steps() {
            let eig = self.system.step_eigen(&pulses.step(k));
            for s in &mut states {
                self.system.apply_step(&eig, pulses.dt(), s);
            }
        }
        Ok(states.iter().zip(&self.target).map(|(s, t)| t.dotc(s)).collect())
    }

    /// Per-pair transfer fidelities `|⟨t_k|U|i_k⟩|²`.
    pub fn fidelities(&self, pulses: &PulseSet) -> Result<Vec<f64>> {
        Ok(self.overlaps(pulses)?.into_iter().map(|o| o.norm_sqr()).collect())
    }

    /// Phase-coherent fidelity `|S|²/W²`.
    pub fn coherent_fidelity(&self, pulses: &PulseSet) -> Result<f64> {
        let o = self.overlaps(pulses)?;
        let w: f64 = self.weights.iter().sum();
        let s: C64 = o.iter().zip(&self.weights).map(|(o, w)| o * w).sum();
        Ok(s.norm_sqr() / (w * w))
    }

    fn penalty(pulses: &PulseSet, p: Penalties, grad: &mut [Vec<f64>]) -> f64 {
        let dt = pulses.dt();
        let mut cost = 0.0;
        for (row, g) in pulses.amplitudes().iter().zip(grad.iter_mut()) {
            if p.amp > 0.0 {
                for (e, gk) in row.iter().zip(g.iter_mut()) {
                    cost += p.amp * e * e * dt;
                    *gk += 2.0 * p.amp * e * dt;
                }
            }
            if p.smooth > 0.0 {
                for k in 1..row.len() {
                    let d = row[k] - row[k - 1];
                    cost += p.smooth * d * d;
                    g[k] += 2.0 * p.smooth * d;
                    g[k - 1] -= 2.0 * p.smooth * d;
                }
            }
        }
        cost
    }

    /// Cost and exact gradient.
    pub fn evaluate(&self, pulses: &PulseSet, penalties: Penalties) -> Result<Evaluation> {
        let sys = &self.system;
        sys.check_pulses(pulses)?;
        let n_steps = pulses.n_steps();
        let dt = pulses.dt();
        let n_c = sys.n_controls();
        let dim = sys.dim();

        // Cache step eigendecompositions when they fit in 2 GiB; otherwise recompute.
        let eig_bytes: usize = sys.blocks().iter().map(|b| b.dim() * (b.dim() + 1) * 16).sum::<usize>() * n_steps;
        let cache = eig_bytes <= 2 << 30;
        let mut eigs: Vec<Vec<HermitianEigen>> = Vec::with_capacity(if cache { n_steps } else { 0 });

        let mut psi = self.initial.clone();
        for k in 0..n_steps {
            let e = sys.step_eigen(&pulses.step(k));
            for s in &mut psi {
                sys.apply_step(&e, dt, s);
            }
            if cache {
                eigs.push(e);
            }
        }
        let w_total: f64 = self.weights.iter().sum();
        let overlap: C64 = psi.iter().zip(&self.target).zip(&self.weights).map(|((s, t), w)| t.dotc(s) * w).sum();
        let infidelity = 1.0 - overlap.norm_sqr() / (w_total * w_total);

        let mut grad = vec![vec![0.0; n_steps]; n_c];
        let mut chi: Vec<CVector> = self.target.iter().zip(&self.weights).map(|(t, w)| t * C64::from(*w)).collect();
        let scale = -2.0 / (w_total * w_total);
        let mut a_buf: Vec<CVector> = Vec::new();
        let mut c_buf: Vec<CVector> = Vec::new();
        for k in (0..n_steps).rev() {
            let owned;
            let e: &[HermitianEigen] = if cache {
                &eigs[k]
            } else {
                owned = sys.step_eigen(&pulses.step(k));
                &owned
            };
            // forward state before step k
            for s in &mut psi {
                sys.apply_step_adjoint(e, dt, s);
            }
            let mut ds = vec![C64::from(0.0); n_c];
            for ((eb, block), &off) in e.iter().zip(sys.blocks()).zip(sys.offsets()) {
                let n = eb.dim();
                a_buf.clear();
                c_buf.clear();
                for (s, x) in psi.iter().zip(&chi) {
                    a_buf.push(eb.vectors.ad_mul(&s.rows(off, n)));
                    c_buf.push(eb.vectors.ad_mul(&x.rows(off, n)));
                }
                // X_ab = G_ab Σ_p conj(c_pa) a_pb
                let mut x = CMatrix::zeros(n, n);
                for (a, c) in a_buf.iter().zip(&c_buf) {
                    x.ger(C64::from(1.0), &c.map(|z| z.conj()), a, C64::from(1.0));
                }
                for i in 0..n {
                    for j in 0..n {
                        x[(i, j)] *= exp_divided_difference(eb.values[i], eb.values[j], dt);
                    }
                }
                // ∂S/∂ε_j = Σ_pq C_j[p,q] Z[p,q] with Z = conj(V) X Vᵀ; only the entries touched by
                // the sparse controls are formed
                let w = x * eb.vectors.transpose();
                let vc = eb.vectors.map(|v| v.conj());
                for (j, d) in ds.iter_mut().enumerate() {
                    for &(p, q, v) in block.control_entries(j) {
                        *d += v * vc.row(p).transpose().dot(&w.column(q));
                    }
                }
            }
            for (j, d) in ds.iter().enumerate() {
                grad[j][k] = scale * (overlap.conj() * d).re;
            }
            for x in &mut chi {
                sys.apply_step_adjoint(e, dt, x);
            }
        }
        debug_assert!(psi.iter().all(|s| s.len() == dim));
        let penalty = Self::penalty(pulses, penalties, &mut grad);
        Ok(Evaluation { cost: infidelity + penalty, infidelity, gradient: grad })
    }
}

/// Cost and gradient of `pulses` for `constraints` on a dense system.
pub fn cost_and_gradient(
    pulses: &PulseSet,
    constraints: &ConstraintSet,
    system: &ControlledSystem,
    penalties: Penalties,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let e = GrapeProblem::new(system.clone(), constraints)?.evaluate(pulses, penalties)?;
    Ok((e.cost, e.gradient))
}

/// Seeded low-pass-filtered noise with standard deviation `0.01·amp_max`.
pub fn initial_pulses(labels: Vec<String>, dt: f64, n_steps: usize, amp_max: f64, seed: u64) -> Result<PulseSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = 9usize;
    let mut amps = Vec::with_capacity(labels.len());
    for _ in 0..labels.len() {
        let raw: Vec<f64> = (0..n_steps + window).map(|_| StandardNormal.sample(&mut rng)).collect();
        let smooth: Vec<f64> = (0..n_steps).map(|k| raw[k..k + window].iter().sum::<f64>() / window as f64).collect();
        let mean = smooth.iter().sum::<f64>() / n_steps.max(1) as f64;
        let var = smooth.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n_steps.max(1) as f64;
        let s = if var > 0.0 { 0.01 * amp_max / var.sqrt() } else { 0.0 };
        amps.push(smooth.iter().map(|x| ((x - mean) * s).clamp(-amp_max, amp_max)).collect());
    }
    PulseSet::new(dt, labels, amps)
}

#[derive(Debug, Clone)]
pub struct GrapeResult {
    pub pulses: PulseSet,
    /// Accepted costs, starting with the initial cost.
    pub history: Vec<f64>,
    pub status: Status,
    pub evaluations: usize,
    pub fidelities: Vec<f64>,
    pub coherent_fidelity: f64,
    pub wall_time_s: f64,
}

impl GrapeResult {
    pub fn mean_fidelity(&self) -> f64 {
        self.fidelities.iter().sum::<f64>() / self.fidelities.len().max(1) as f64
    }
}

/// Run GRAPE from `initial`. Amplitudes are optimised in units of `amp_max` and clamped to it.
pub fn optimize(config: &GrapeConfig, problem: &GrapeProblem, initial: &PulseSet) -> Result<GrapeResult> {
    config.validate()?;
    problem.system().check_pulses(initial)?;
    let start = Instant::now();
    let bound = config.amp_max;
    let x0: Vec<f64> = initial.flatten().iter().map(|v| (v / bound).clamp(-1.0, 1.0)).collect();
    let penalties = Penalties::from(config);
    let mut failure = None;
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        let scaled: Vec<f64> = x.iter().map(|v| v * bound).collect();
        let eval = initial.from_flat(&scaled).and_then(|p| problem.evaluate(&p, penalties));
        match eval {
            Ok(e) => (e.cost, e.gradient.concat().iter().map(|g| g * bound).collect()),
            Err(err) => {
                failure.get_or_insert(err);
                (f64::NAN, vec![0.0; x.len()])
            }
        }
    };
    let opts = MinimizeOptions {
        method: config.method,
        max_iters: config.max_iters,
        tol: config.convergence_tol,
        target: config.target_cost,
        bound: Some(1.0),
        initial_step: config.initial_step,
        ..Default::default()
    };
    let r = minimize(objective, &x0, &opts);
    if let Some(err) = failure {
        return Err(err);
    }
    let pulses = initial.from_flat(&r.x.iter().map(|v| v * bound).collect::<Vec<_>>())?.with_amp_max(bound)?;
    let fidelities = problem.fidelities(&pulses)?;
    let coherent_fidelity = problem.coherent_fidelity(&pulses)?;
    log::info!(
        "grape: {:?} after {} accepted steps, cost {:.3e}, mean fidelity {:.6}",
        r.status,
        r.history.len() - 1,
        r.cost,
        fidelities.iter().sum::<f64>() / fidelities.len() as f64
    );
    Ok(GrapeResult {
        pulses,
        history: r.history,
        status: r.status,
        evaluations: r.evaluations,
        fidelities,
        coherent_fidelity,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Optimisation report written next to the pulse file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrapeReport {
    pub constraint_set: ConstraintKind,
    pub config: GrapeConfig,
    pub dims: Vec<usize>,
    pub dt_ns: f64,
    pub n_steps: usize,
    pub status: Status,
    pub cost_history: Vec<f64>,
    pub constraint_labels: Vec<String>,
    pub constraint_fidelities: Vec<f64>,
    pub mean_fidelity: f64,
    pub coherent_fidelity: f64,
    pub wall_time_s: f64,
}

impl GrapeReport {
    pub fn new(kind: ConstraintKind, config: &GrapeConfig, dims: &[usize], problem: &GrapeProblem, r: &GrapeResult) -> Self {
        Self {
            constraint_set: kind,
            config: config.clone(),
            dims: dims.to_vec(),
            dt_ns: crate::units::s_to_ns(r.pulses.dt()),
            n_steps: r.pulses.n_steps(),
            status: r.status,
            cost_history: r.history.clone(),
            constraint_labels: problem.labels().to_vec(),
            constraint_fidelities: r.fidelities.clone(),
            mean_fidelity: r.mean_fidelity(),
            coherent_fidelity: r.coherent_fidelity,
            wall_time_s: r.wall_time_s,
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{qubit_ops, qubit_state, LogicalLabel, Operator};

    fn qubit_problem() -> GrapeProblem {
        let (sx, sy, _) = qubit_ops();
        let sys = ControlledSystem::dense(&Operator::zeros(vec![2]), &[sx, sy], vec!["q_I".into(), "q_Q".into()]).unwrap();
        let pair = ConstraintPair {
            initial: qubit_state(LogicalLabel::G),
            target: qubit_state(LogicalLabel::E),
            weight: 1.0,
            label: "g->e".into(),
        };
        GrapeProblem::new(sys, &ConstraintSet::new(ConstraintKind::Custom, vec![pair]).unwrap()).unwrap()
    }

    #[test]
    fn orthogonal_target_costs_one() {
        let p = qubit_problem();
        let pulses = PulseSet::zeros(1e-9, vec!["q_I".into(), "q_Q".into()], 10).unwrap();
        let e = p.evaluate(&pulses, Penalties::default()).unwrap();
        assert!((e.cost - 1.0).abs() < 1e-15);
    }

    #[test]
    fn analytic_pi_pulse_costs_zero() {
        let p = qubit_problem();
        let t = 100e-9;
        let n = 50;
        // σ_x drive ε: rotation angle 2εT = π
        let eps = std::f64::consts::PI / (2.0 * t);
        let pulses = PulseSet::new(t / n as f64, vec!["q_I".into(), "q_Q".into()], vec![vec![eps; n], vec![0.0; n]]).unwrap();
        assert!(p.evaluate(&pulses, Penalties::default()).unwrap().cost < 1e-14);
    }

    #[test]
    fn pi_transfer_converges() {
        let p = qubit_problem();
        let cfg = GrapeConfig { amp_max: mhz_to_rad(50.0), max_iters: 200, target_cost: Some(1e-8), ..Default::default() };
        let init = initial_pulses(p.system().labels().to_vec(), 2e-9, 50, cfg.amp_max, 3).unwrap();
        let r = optimize(&cfg, &p, &init).unwrap();
        assert!(*r.history.last().unwrap() < 1e-6, "{:?}", r.history.last());
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        let again = optimize(&cfg, &p, &init).unwrap();
        assert_eq!(r.history, again.history);
    }
}

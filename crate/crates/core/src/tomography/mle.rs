//! Maximum-likelihood state reconstruction.
//!
//! `ρ = T†T / Tr(T†T)` with `T` lower triangular, so every iterate is a valid density matrix.
//! The multinomial log-likelihood `Σ_s Σ_k f_sk log Tr[E_sk ρ]` (frequencies `f`) is maximised by
//! L-BFGS on the real and imaginary parts of `T`, starting from `T = I/√d`.

use crate::dynamics::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{trace_product, CMatrix, C64};
use crate::optim::{minimize, MinimizeOptions, Status};

/// One measurement setting: effects (POVM elements) with their observed counts.
#[derive(Debug, Clone)]
pub struct MeasurementSetting {
    pub effects: Vec<CMatrix>,
    pub counts: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MleOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iters: 3000, tol: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Mean log-likelihood per count.
    pub log_likelihood: f64,
    pub status: Status,
    pub iterations: usize,
}

/// Number of lower-triangular entries of a `d × d` matrix.
fn n_params(d: usize) -> usize {
    d * (d + 1)
}

fn unpack(x: &[f64], d: usize) -> CMatrix {
    let mut t = CMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in 0..=i {
            t[(i, j)] = C64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

/// Rank of the span of all effects, via the Gram matrix of their vectorisations.
fn effect_rank(settings: &[MeasurementSetting], d: usize) -> usize {
    let effects: Vec<&CMatrix> = settings.iter().flat_map(|s| &s.effects).collect();
    let n = effects.len();
    let mut gram = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            gram[(a, b)] = trace_product(&effects[a].adjoint(), effects[b]);
        }
    }
    let eig = crate::linalg::HermitianEigen::new(&crate::linalg::hermitian_part(&gram));
    let top = eig.values.max().max(0.0);
    let rank = eig.values.iter().filter(|v| **v > 1e-10 * top).count();
    rank.min(d * d)
}

pub fn mle_reconstruct(settings: &[MeasurementSetting], dims: &[usize], opts: &MleOptions) -> Result<MleResult> {
    let d: usize = dims.iter().product();
    if settings.is_empty() {
        return Err(Error::Missing("no measurement settings".into()));
    }
    for (i, s) in settings.iter().enumerate() {
        if s.effects.len() != s.counts.len() {
            return Err(Error::DimensionMismatch(format!("setting {i}: {} effects, {} counts", s.effects.len(), s.counts.len())));
        }
        if s.effects.iter().any(|e| e.shape() != (d, d)) {
            return Err(Error::DimensionMismatch(format!("setting {i}: effects must be {d}x{d}")));
        }
        if s.counts.iter().any(|c| *c < 0.0 || !c.is_finite()) {
            return Err(Error::Unphysical(format!("setting {i}: negative or non-finite counts")));
        }
    }
    let rank = effect_rank(settings, d);
    if rank < d * d {
        log::warn!("measurement settings span {rank} of {} operator dimensions; reconstruction is not unique", d * d);
    }
    let total: f64 = settings.iter().flat_map(|s| &s.counts).sum();
    if !(total > 0.0) {
        return Err(Error::Missing("all counts are zero".into()));
    }
    let terms: Vec<(&CMatrix, f64)> = settings
        .iter()
        .flat_map(|s| s.effects.iter().zip(s.counts.iter().map(|c| c / total)))
        .filter(|(_, f)| *f > 0.0)
        .collect();

    // negative mean log-likelihood and its gradient in the packed parameters
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        let t = unpack(x, d);
        let a = t.adjoint() * &t;
        let tr = crate::linalg::trace(&a).re;
        let rho = &a / C64::from(tr);
        let mut ll = 0.0;
        let mut r = CMatrix::zeros(d, d);
        for (e, f) in &terms {
            let p = trace_product(e, &rho).re;
            if !(p > 0.0) {
                return (f64::INFINITY, vec![0.0; x.len()]);
            }
            ll += f * p.ln();
            r += *e * C64::from(f / p);
        }
        // ∂L/∂A = (R − Tr(Rρ) I) / Tr A; ∂L/∂T̄ pairs with 2 T (∂L/∂A)
        let g_a = (&r - CMatrix::identity(d, d) * trace_product(&r, &rho)) / C64::from(tr);
        let g_t = &t * g_a * C64::from(2.0);
        let mut grad = Vec::with_capacity(x.len());
        for i in 0..d {
            for j in 0..=i {
                grad.push(-g_t[(i, j)].re);
                grad.push(-g_t[(i, j)].im);
            }
        }
        (-ll, grad)
    };

    let mut x0 = vec![0.0; n_params(d)];
    let mut k = 0;
    for i in 0..d {
        for j in 0..=i {
            if i == j {
                x0[k] = 1.0 / (d as f64).sqrt();
            }
            k += 2;
        }
    }
    let mopts = MinimizeOptions { max_iters: opts.max_iters, tol: opts.tol, initial_step: 0.05, ..Default::default() };
    let res = minimize(objective, &x0, &mopts);
    if res.status == Status::Stalled {
        log::warn!("MLE optimizer stalled after {} iterations", res.history.len() - 1);
    }
    let t = unpack(&res.x, d);
    let a = t.adjoint() * &t;
    let rho = crate::linalg::hermitian_part(&(&a / crate::linalg::trace(&a)));
    Ok(MleResult {
        rho: DensityMatrix::new(dims.to_vec(), rho)?,
        log_likelihood: -res.cost,
        status: res.status,
        iterations: res.history.len() - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{qubit_state, LogicalLabel, StateVector};

    /// Projective measurements of each qubit in the X, Y and Z bases.
    fn pauli_settings(rho: &CMatrix) -> Vec<MeasurementSetting> {
        let bases = [
            [LogicalLabel::Plus, LogicalLabel::Minus],
            [LogicalLabel::PlusI, LogicalLabel::MinusI],
            [LogicalLabel::G, LogicalLabel::E],
        ];
        let mut out = Vec::new();
        for b1 in &bases {
            for b2 in &bases {
                let mut effects = Vec::new();
                for &l1 in b1 {
                    for &l2 in b2 {
                        effects.push(qubit_state(l1).tensor(&qubit_state(l2)).projector());
                    }
                }
                let counts = effects.iter().map(|e| trace_product(e, rho).re).collect();
                out.push(MeasurementSetting { effects, counts });
            }
        }
        out
    }

    #[test]
    fn exact_probabilities_recover_pure_state() {
        let g = qubit_state(LogicalLabel::G);
        let e = qubit_state(LogicalLabel::E);
        let bell: StateVector = g.tensor(&e).add(&e.tensor(&g)).unwrap().normalized();
        let r = mle_reconstruct(&pauli_settings(&bell.projector()), &[2, 2], &MleOptions::default()).unwrap();
        assert!(r.rho.fidelity_to(&bell) > 1.0 - 1e-6, "{}", r.rho.fidelity_to(&bell));
        assert!((r.rho.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mixed_state_recovered() {
        let rho = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from(0.4),
            C64::from(0.3),
            C64::from(0.2),
            C64::from(0.1),
        ]));
        let r = mle_reconstruct(&pauli_settings(&rho), &[2, 2], &MleOptions::default()).unwrap();
        assert!(crate::linalg::max_abs_diff(r.rho.matrix(), &rho) < 1e-5);
    }
}

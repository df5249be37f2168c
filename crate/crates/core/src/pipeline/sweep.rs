//! Selective-pulse baseline: CZ infidelity against gate duration, closed and open.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::GATE_MODES;
use crate::dynamics::{collapse_ops, lindblad_evolve_matrix, ControlledSystem, ErrorChannelSet, LindbladOptions};
use crate::error::{Error, Result};
use crate::grape::{cz_constraints, cz_logical_basis, selective_baseline, GrapeProblem, PulseShape};
use crate::hamiltonian::{block_decompose, static_diagonal, SystemSpec};
use crate::linalg::{CMatrix, CVector, C64};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepOptions {
    pub dt: f64,
    pub shape: PulseShape,
    pub cavity_dim: usize,
    /// Channels for the open-system curve; `None` skips it.
    pub channels: Option<ErrorChannelSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub duration_us: f64,
    pub unitary_infidelity: f64,
    pub decoherent_infidelity: Option<f64>,
}

impl SweepRow {
    pub fn to_csv(rows: &[SweepRow]) -> String {
        let mut s = String::from("duration_us,unitary_infidelity,decoherent_infidelity\n");
        for r in rows {
            let d = r.decoherent_infidelity.map(|v| format!("{v:?}")).unwrap_or_default();
            let _ = writeln!(s, "{:?},{:?},{d}", r.duration_us, r.unitary_infidelity);
        }
        s
    }
}

/// For each duration, the `(2, 2)`-selective 2π pulse on the coupler, scored as
/// `1 − mean_k ⟨t_k|ρ_k|t_k⟩` over the sixteen CZ constraints. Targets include the free evolution
/// `e^{−iH₀T}`, i.e. the gate is judged in the frame that tracks the static phases.
pub fn run_baseline_sweep(system: &SystemSpec, durations: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if durations.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidDimension("durations must be positive".into()));
    }
    let gate = system.subsystem(&GATE_MODES, &["QC"])?.with_cavity_dim(opts.cavity_dim)?;
    let blocks = block_decompose(&gate)?;
    let dims = gate.dims();
    let constraints = cz_constraints(&dims)?;
    let diag = static_diagonal(&gate);
    let basis: Vec<CVector> = cz_logical_basis(&dims)?.into_iter().map(|s| s.into_amplitudes()).collect();
    let open = match &opts.channels {
        Some(ch) if !ch.is_empty() => Some(collapse_ops(&gate, &ch.restricted_to(&gate))?.into_iter().map(|o| o.into_matrix()).collect::<Vec<_>>()),
        _ => None,
    };
    let dense = ControlledSystem::from_system(&gate)?;
    let h0 = dense.static_matrix();
    let controls: Vec<CMatrix> = (0..dense.n_controls()).map(|j| dense.control_matrix(j)).collect();

    let mut rows = Vec::with_capacity(durations.len());
    for &t in durations {
        let pulses = selective_baseline(&blocks, (2, 2), opts.shape, t, opts.dt)?;
        let t = pulses.duration();
        let free = CMatrix::from_diagonal(&CVector::from_iterator(diag.len(), diag.iter().map(|e| C64::from_polar(1.0, -e * t))));
        let tracked = constraints.map_targets(&free)?;
        let problem = GrapeProblem::on_blocks(&blocks, &tracked)?;
        let fids = problem.fidelities(&pulses)?;
        let unitary = 1.0 - fids.iter().sum::<f64>() / fids.len() as f64;

        let decoherent = match &open {
            None => None,
            Some(collapse) => {
                // evolve |ℓ_a⟩⟨ℓ_b| for a ≤ b; the rest follow by adjoint
                let lopts = LindbladOptions::default();
                let mut evolved = vec![vec![CMatrix::zeros(0, 0); 4]; 4];
                for a in 0..4 {
                    for b in a..4 {
                        let x = &basis[a] * basis[b].adjoint();
                        let y = lindblad_evolve_matrix(&h0, &controls, &pulses, collapse, &x, &lopts)?;
                        if a != b {
                            evolved[b][a] = y.adjoint();
                        }
                        evolved[a][b] = y;
                    }
                }
                let mut total = 0.0;
                for pair in &tracked.pairs {
                    let c: Vec<C64> = basis.iter().map(|l| l.dotc(pair.initial.amplitudes())).collect();
                    let tv = pair.target.amplitudes();
                    let mut f = C64::from(0.0);
                    for a in 0..4 {
                        for b in 0..4 {
                            f += c[a] * c[b].conj() * tv.dotc(&(&evolved[a][b] * tv));
                        }
                    }
                    total += f.re;
                }
                Some(1.0 - total / tracked.len() as f64)
            }
        };
        log::info!("baseline T = {:.3} us: unitary {unitary:.3e}, open {decoherent:?}", t * 1e6);
        rows.push(SweepRow { duration_us: t * 1e6, unitary_infidelity: unitary, decoherent_infidelity: decoherent });
    }
    Ok(rows)
}

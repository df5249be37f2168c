//! Process tomography of encode → (CZ) → decode on the decoded ancilla qubits.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{device, ExperimentReport, RunConfig, Stage, ENCODE_MODES, FULL_MODES, GATE_MODES};
use crate::dynamics::{collapse_ops, lindblad_evolve_matrix, DensityMatrix, ErrorChannelSet, LindbladOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_drive_ops, build_static, SystemSpec};
use crate::hilbert::{fock_state, qubit_state, LogicalLabel, StateVector};
use crate::linalg::{hermitian_part, CMatrix, C64, ONE};
use crate::tomography::{pauli_transfer_map, postselect_ground, process_fidelity, PauliTransferMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Identity,
    Cz,
}

#[derive(Debug, Clone)]
pub struct QptStages {
    pub encode: Stage,
    pub decode: Stage,
    pub cz: Option<Stage>,
}

#[derive(Debug, Clone)]
pub struct QptOptions {
    /// Cavity truncation of the full device.
    pub truncation: usize,
    pub channels: ErrorChannelSet,
    pub postselect: bool,
}

impl Default for QptOptions {
    fn default() -> Self {
        Self { truncation: 8, channels: ErrorChannelSet::none(), postselect: false }
    }
}

#[derive(Debug, Clone)]
pub struct QptResult {
    pub gate: Gate,
    /// Encode → decode.
    pub reference: PauliTransferMatrix,
    /// Encode → CZ → decode.
    pub full: Option<PauliTransferMatrix>,
    pub f_reference: f64,
    pub f_full: Option<f64>,
    /// `F_full / F_reference`.
    pub f_normalized: Option<f64>,
    /// Coupler-in-`g` probability for the maximally mixed logical input.
    pub success_reference: Option<f64>,
    pub success_full: Option<f64>,
}

/// `|a⟩_Q1 |0⟩ |g⟩ |0⟩ |b⟩_Q2` for `ab = 00, 01, 10, 11`.
pub fn qpt_logical_basis(full: &SystemSpec) -> Result<Vec<StateVector>> {
    let d1 = full.mode("S1")?.dim;
    let d2 = full.mode("S2")?.dim;
    let mut out = Vec::with_capacity(4);
    for a in [LogicalLabel::G, LogicalLabel::E] {
        for b in [LogicalLabel::G, LogicalLabel::E] {
            out.push(StateVector::tensor_all(&[
                qubit_state(a),
                fock_state(d1, 0)?,
                qubit_state(LogicalLabel::G),
                fock_state(d2, 0)?,
                qubit_state(b),
            ]));
        }
    }
    Ok(out)
}

/// Stage evolution on the full device, either unitary or through the master equation.
enum Step {
    Unitary(CMatrix),
    Lindblad { h0: CMatrix, controls: Vec<CMatrix>, pulses: crate::dynamics::PulseSet },
}

fn prepare(full: &SystemSpec, stage: &Stage, modes: &[&str], open: bool) -> Result<Step> {
    match stage {
        Stage::Pulses(p) if open => {
            let driven = super::driven_modes(p)?;
            let driven: Vec<&str> = driven.iter().map(String::as_str).collect();
            let sys = full.subsystem(&FULL_MODES, &driven)?;
            let ops = build_drive_ops(&sys)?;
            let labels: Vec<&str> = ops.iter().map(|c| c.label.as_str()).collect();
            if labels != p.labels().iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(Error::DimensionMismatch(format!("pulse labels {:?} vs controls {labels:?}", p.labels())));
            }
            Ok(Step::Lindblad {
                h0: build_static(&sys).into_matrix(),
                controls: ops.into_iter().map(|c| c.op.into_matrix()).collect(),
                pulses: p.clone(),
            })
        }
        _ => Ok(Step::Unitary(stage.embedded(full, modes)?.into_matrix())),
    }
}

/// PTM of a stage chain, plus the post-selection probability when requested.
fn chain_ptm(
    full: &SystemSpec,
    chain: &[(&Stage, &[&str])],
    opts: &QptOptions,
) -> Result<(PauliTransferMatrix, Option<f64>)> {
    let open = !opts.channels.is_empty();
    let mut steps = Vec::new();
    for (stage, modes) in chain {
        steps.push(prepare(full, stage, modes, open)?);
    }
    // fuse consecutive unitaries
    let mut fused: Vec<Step> = Vec::new();
    for s in steps {
        match (fused.last_mut(), s) {
            (Some(Step::Unitary(acc)), Step::Unitary(u)) => *acc = u * &*acc,
            (_, s) => fused.push(s),
        }
    }
    let collapse: Vec<CMatrix> =
        if open { collapse_ops(full, &opts.channels.restricted_to(full))?.into_iter().map(|o| o.into_matrix()).collect() } else { Vec::new() };
    let basis = qpt_logical_basis(full)?;
    let coupler = full.mode_index("QC").ok_or_else(|| Error::Missing("mode `QC`".into()))?;
    let lindblad_opts = LindbladOptions::default();

    let mut success = Vec::new();
    let ptm = pauli_transfer_map(
        |rho_in| {
            let mut rho = rho_in.matrix().clone();
            for s in &fused {
                rho = match s {
                    Step::Unitary(u) => u * rho * u.adjoint(),
                    Step::Lindblad { h0, controls, pulses } => {
                        lindblad_evolve_matrix(h0, controls, pulses, &collapse, &rho, &lindblad_opts)?
                    }
                };
            }
            if !opts.postselect {
                return Ok(rho);
            }
            let rho = DensityMatrix::with_tolerance(full.dims(), hermitian_part(&rho), 1e-8)?;
            let (kept, p) = postselect_ground(&rho, coupler)?;
            // computational-basis inputs average to the maximally mixed logical input
            if basis.iter().any(|b| (rho_in.fidelity_to(b) - 1.0).abs() < 1e-12) {
                success.push(p);
            }
            Ok(kept.into_matrix() * C64::from(p))
        },
        &basis,
    )?;
    if !opts.postselect {
        return Ok((ptm, None));
    }
    let p_mean = success.iter().sum::<f64>() / success.len() as f64;
    let scaled = PauliTransferMatrix::new(ptm.matrix() / p_mean)?;
    Ok((scaled, Some(p_mean)))
}

fn ideal_ptm(gate: Gate) -> PauliTransferMatrix {
    match gate {
        Gate::Identity => PauliTransferMatrix::identity(),
        Gate::Cz => {
            let mut u = CMatrix::identity(4, 4);
            u[(3, 3)] = -ONE;
            PauliTransferMatrix::from_unitary(&u).expect("4x4")
        }
    }
}

/// Simulate the QPT sequence on the full device and extract process fidelities.
pub fn run_qpt(system: &SystemSpec, gate: Gate, stages: &QptStages, opts: &QptOptions) -> Result<QptResult> {
    let full = device(system, opts.truncation)?;
    let (reference, success_reference) =
        chain_ptm(&full, &[(&stages.encode, &ENCODE_MODES), (&stages.decode, &ENCODE_MODES)], opts)?;
    let f_reference = process_fidelity(&reference, &PauliTransferMatrix::identity())?;
    let mut out = QptResult {
        gate,
        reference,
        full: None,
        f_reference,
        f_full: None,
        f_normalized: None,
        success_reference,
        success_full: None,
    };
    if gate == Gate::Cz {
        let cz = stages.cz.as_ref().ok_or_else(|| Error::Missing("CZ stage".into()))?;
        let (ptm, success) = chain_ptm(
            &full,
            &[(&stages.encode, &ENCODE_MODES), (cz, &GATE_MODES), (&stages.decode, &ENCODE_MODES)],
            opts,
        )?;
        let f = process_fidelity(&ptm, &ideal_ptm(Gate::Cz))?;
        out.f_full = Some(f);
        out.f_normalized = Some(f / f_reference);
        out.success_full = success;
        out.full = Some(ptm);
    }
    Ok(out)
}

impl QptResult {
    /// Write the PTMs and the report into `dir`.
    pub fn write(&self, dir: &Path, config: RunConfig, started: Instant) -> Result<ExperimentReport> {
        let mut rep = ExperimentReport::new("qpt", config);
        rep.emit(dir, "ptm_reference.csv", &self.reference.to_csv_string())?;
        rep.scalar("f_reference", self.f_reference);
        if let Some(p) = self.success_reference {
            rep.scalar("success_reference", p);
        }
        if let Some(r) = &self.full {
            rep.emit(dir, "ptm_full.csv", &r.to_csv_string())?;
        }
        for (k, v) in [("f_full", self.f_full), ("f_normalized", self.f_normalized), ("success_full", self.success_full)] {
            if let Some(v) = v {
                rep.scalar(k, v);
            }
        }
        rep.wall_time_s = started.elapsed().as_secs_f64();
        rep.write(dir)?;
        Ok(rep)
    }
}

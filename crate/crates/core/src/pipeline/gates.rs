//! Gate optimisation jobs on the subsystems each gate acts on.

use serde::{Deserialize, Serialize};

use super::{ENCODE_MODES, GATE_MODES};
use crate::dynamics::ControlledSystem;
use crate::error::{Error, Result};
use crate::grape::{
    cz_constraints, decode_constraints, encode_constraints, encode_single_constraints, hadamard_constraints,
    initial_pulses, optimize, ConstraintSet, GrapeConfig, GrapeProblem, GrapeReport, GrapeResult,
};
use crate::hamiltonian::{block_decompose, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    /// Coupler-only CZ on `S1 QC S2`, optimised on the photon-number blocks.
    Cz,
    /// `Q1 Q2 → S1 S2` transfer; all four modes driven.
    Encode,
    Decode,
    /// `R_y(π/2)` on `S2`, driving `QC` and `S2`.
    Hadamard,
    /// Single-cavity encode on `Q1 S1`.
    EncodeSingle,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Cz => "cz",
            GateKind::Encode => "encode",
            GateKind::Decode => "decode",
            GateKind::Hadamard => "hadamard",
            GateKind::EncodeSingle => "encode-single",
        }
    }

    /// Modes of the gate's subsystem and the driven ones.
    pub fn modes(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            GateKind::Cz => (&GATE_MODES, &["QC"]),
            GateKind::Hadamard => (&GATE_MODES, &["QC", "S2"]),
            GateKind::Encode | GateKind::Decode => (&ENCODE_MODES, &ENCODE_MODES),
            GateKind::EncodeSingle => (&["Q1", "S1"], &["Q1", "S1"]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateJob {
    pub kind: GateKind,
    /// Seconds.
    pub duration: f64,
    pub dt: f64,
    /// Cavity truncation.
    pub truncation: usize,
    pub config: GrapeConfig,
    /// Weight of the Bell pair in the Hadamard set.
    pub bell_weight: f64,
}

impl GateJob {
    /// 1 μs CZ and Hadamard, 3 μs encode/decode, 2 ns steps.
    pub fn new(kind: GateKind) -> Self {
        let (duration, truncation) = match kind {
            GateKind::Cz => (1e-6, 5),
            GateKind::Hadamard => (1e-6, 6),
            GateKind::Encode | GateKind::Decode | GateKind::EncodeSingle => (3e-6, 8),
        };
        Self { kind, duration, dt: 2e-9, truncation, config: GrapeConfig::default(), bell_weight: 4.0 }
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// The gate subsystem at the job's truncation.
    pub fn system(&self, system: &SystemSpec) -> Result<SystemSpec> {
        let (modes, drives) = self.kind.modes();
        system.subsystem(modes, drives)?.with_cavity_dim(self.truncation)
    }

    pub fn constraints(&self, sys: &SystemSpec) -> Result<ConstraintSet> {
        let dims = sys.dims();
        match self.kind {
            GateKind::Cz => cz_constraints(&dims),
            GateKind::Hadamard => hadamard_constraints(&dims, self.bell_weight),
            GateKind::Encode => encode_constraints(&dims),
            GateKind::Decode => decode_constraints(&dims),
            GateKind::EncodeSingle => encode_single_constraints(&dims),
        }
    }

    pub fn problem(&self, system: &SystemSpec) -> Result<GrapeProblem> {
        let sys = self.system(system)?;
        let cs = self.constraints(&sys)?;
        match self.kind {
            GateKind::Cz => GrapeProblem::on_blocks(&block_decompose(&sys)?, &cs),
            _ => GrapeProblem::new(ControlledSystem::from_system(&sys)?, &cs),
        }
    }
}

/// Optimise from seeded noise; returns the result and its report.
pub fn optimize_gate(system: &SystemSpec, job: &GateJob) -> Result<(GrapeResult, GrapeReport)> {
    if job.n_steps() == 0 {
        return Err(Error::InvalidDimension("duration shorter than one step".into()));
    }
    let sys = job.system(system)?;
    let cs = job.constraints(&sys)?;
    let problem = job.problem(system)?;
    let init = initial_pulses(problem.system().labels().to_vec(), job.dt, job.n_steps(), job.config.amp_max, job.config.seed)?;
    let result = optimize(&job.config, &problem, &init)?;
    let report = GrapeReport::new(cs.kind, &job.config, &sys.dims(), &problem, &result);
    Ok((result, report))
}

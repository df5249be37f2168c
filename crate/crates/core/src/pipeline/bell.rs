//! Bell-state preparation: encode `|+⟩|+⟩`, CZ, then `R_y(π/2)` on `S2`.

use std::path::Path;
use std::time::Instant;

use super::{device, ExperimentReport, RunConfig, Stage, ENCODE_MODES, GATE_MODES};
use crate::error::{Error, Result};
use crate::hamiltonian::SystemSpec;
use crate::hilbert::{fock_state, logical_state, partial_trace, qubit_state, LogicalLabel, StateVector};
use crate::linalg::CMatrix;
use crate::tomography::{wigner_joint, JointCut, WignerGrid};

#[derive(Debug, Clone)]
pub struct BellStages {
    pub encode: Stage,
    pub cz: Stage,
    pub hadamard: Stage,
}

#[derive(Debug, Clone)]
pub struct BellResult {
    /// `⟨B|ρ_S1S2|B⟩` after the last stage, `B = (|0_L 1_L⟩ + |1_L 0_L⟩)/√2`.
    pub fidelity: f64,
    /// Reduced `S1 ⊗ S2` state after each stage: encode, cz, hadamard.
    pub states: Vec<(String, CMatrix)>,
    /// Joint Wigner cuts per stage.
    pub wigner: Vec<(String, String, WignerGrid)>,
    pub cavity_dims: (usize, usize),
}

/// Target Bell state on `S1 ⊗ S2`.
pub fn bell_target(d1: usize, d2: usize) -> Result<StateVector> {
    let l = |a, b| -> Result<StateVector> { Ok(logical_state(a, d1)?.tensor(&logical_state(b, d2)?)) };
    Ok(l(LogicalLabel::G, LogicalLabel::E)?.add(&l(LogicalLabel::E, LogicalLabel::G)?)?.normalized())
}

pub fn run_bell(system: &SystemSpec, stages: &BellStages, truncation: usize, cuts: &[JointCut]) -> Result<BellResult> {
    let full = device(system, truncation)?;
    let dims = full.dims();
    let idx = |m: &str| full.mode_index(m).ok_or_else(|| Error::Missing(format!("mode `{m}`")));
    let keep = [idx("S1")?, idx("S2")?];
    let (d1, d2) = (dims[keep[0]], dims[keep[1]]);
    let plus = qubit_state(LogicalLabel::Plus);
    let mut psi = StateVector::tensor_all(&[
        plus.clone(),
        fock_state(d1, 0)?,
        qubit_state(LogicalLabel::G),
        fock_state(d2, 0)?,
        plus,
    ]);
    let mut states = Vec::new();
    let mut wigner = Vec::new();
    for (name, stage, modes) in [
        ("encode", &stages.encode, &ENCODE_MODES[..]),
        ("cz", &stages.cz, &GATE_MODES[..]),
        ("hadamard", &stages.hadamard, &GATE_MODES[..]),
    ] {
        psi = stage.embedded(&full, modes)?.apply(&psi)?;
        let rho = partial_trace(&psi.projector(), &dims, &keep)?;
        for cut in cuts {
            let grid = wigner_joint(&rho, (d1, d2), ("S1", "S2"), &cut.points())?;
            wigner.push((name.to_string(), cut.name().to_string(), grid));
        }
        states.push((name.to_string(), rho));
    }
    let target = bell_target(d1, d2)?;
    let t = target.amplitudes();
    let fidelity = t.dotc(&(&states[2].1 * t)).re;
    Ok(BellResult { fidelity, states, wigner, cavity_dims: (d1, d2) })
}

impl BellResult {
    pub fn write(&self, dir: &Path, config: RunConfig, started: Instant) -> Result<ExperimentReport> {
        let mut rep = ExperimentReport::new("bell", config);
        for (stage, cut, grid) in &self.wigner {
            rep.emit(dir, &format!("wigner_{stage}_{cut}.csv"), &grid.to_csv_string())?;
        }
        rep.scalar("bell_fidelity", self.fidelity);
        let target = bell_target(self.cavity_dims.0, self.cavity_dims.1)?;
        let t = target.amplitudes();
        for (stage, rho) in &self.states {
            rep.scalar(&format!("bell_overlap_{stage}"), t.dotc(&(rho * t)).re);
        }
        rep.wall_time_s = started.elapsed().as_secs_f64();
        rep.write(dir)?;
        Ok(rep)
    }
}

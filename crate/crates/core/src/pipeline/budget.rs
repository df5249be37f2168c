//! CZ error budget: process infidelity with one decoherence channel at a time.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{stage_system, GATE_MODES};
use crate::dynamics::{
    collapse_ops, lindblad_evolve_matrix, ControlledSystem, ErrorChannelSet, LindbladOptions, PulseSet,
};
use crate::error::Result;
use crate::grape::cz_logical_basis;
use crate::hamiltonian::SystemSpec;
use crate::linalg::{CMatrix, ONE};
use crate::tomography::{pauli_transfer_map, process_fidelity, PauliTransferMatrix};

/// Budget channels in the order they are accumulated: (row label, mode, relaxation?).
pub const BUDGET_CHANNELS: [(&str, &str, bool); 6] = [
    ("S1 relaxation", "S1", true),
    ("S1 dephasing", "S1", false),
    ("S2 relaxation", "S2", true),
    ("S2 dephasing", "S2", false),
    ("QC relaxation", "QC", true),
    ("QC dephasing", "QC", false),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetRow {
    pub channel: String,
    /// Infidelity with only this channel enabled.
    pub infidelity: f64,
    /// Infidelity with this and every earlier channel enabled.
    pub cumulative: f64,
}

impl BudgetRow {
    pub fn to_csv(rows: &[BudgetRow]) -> String {
        let mut s = String::from("channel,infidelity,cumulative\n");
        for r in rows {
            let _ = writeln!(s, "{},{:?},{:?}", r.channel, r.infidelity, r.cumulative);
        }
        s
    }
}

/// `1 − F` of the CZ pulses on `gate_system` (`S1 ⊗ QC ⊗ S2`) against the ideal logical CZ.
///
/// With no channels the propagator is used directly; otherwise each of the sixteen tomography
/// inputs is evolved under the master equation.
pub fn cz_process_infidelity(gate_system: &SystemSpec, pulses: &PulseSet, channels: &ErrorChannelSet) -> Result<f64> {
    let dims = gate_system.dims();
    let basis = cz_logical_basis(&dims)?;
    let sys = ControlledSystem::from_system(gate_system)?;
    sys.check_pulses(pulses)?;
    let ptm = if channels.is_empty() {
        let u = sys.propagator(pulses)?;
        pauli_transfer_map(|rho| Ok(&u * rho.matrix() * u.adjoint()), &basis)?
    } else {
        let h0 = sys.static_matrix();
        let controls: Vec<CMatrix> = (0..sys.n_controls()).map(|j| sys.control_matrix(j)).collect();
        let collapse: Vec<CMatrix> = collapse_ops(gate_system, &channels.restricted_to(gate_system))?.into_iter().map(|o| o.into_matrix()).collect();
        let opts = LindbladOptions::default();
        pauli_transfer_map(|rho| lindblad_evolve_matrix(&h0, &controls, pulses, &collapse, rho.matrix(), &opts), &basis)?
    };
    let mut cz = CMatrix::identity(4, 4);
    cz[(3, 3)] = -ONE;
    Ok(1.0 - process_fidelity(&ptm, &PauliTransferMatrix::from_unitary(&cz)?)?)
}

/// Control infidelity, one row per channel, and the all-channels row.
pub fn run_error_budget(system: &SystemSpec, cz: &PulseSet, cavity_dim: usize) -> Result<Vec<BudgetRow>> {
    let gate = stage_system(system, &GATE_MODES, cz)?.with_cavity_dim(cavity_dim)?;
    let control = cz_process_infidelity(&gate, cz, &ErrorChannelSet::none())?;
    let mut rows = vec![BudgetRow { channel: "control infidelity".into(), infidelity: control, cumulative: control }];
    let mut acc = ErrorChannelSet::none();
    for (label, mode, relaxation) in BUDGET_CHANNELS {
        let only = ErrorChannelSet::only(mode, relaxation, !relaxation);
        let mut t = acc.get(mode);
        if relaxation {
            t.relaxation = true;
        } else {
            t.dephasing = true;
        }
        acc.set(mode, t);
        let single = cz_process_infidelity(&gate, cz, &only)?;
        let cumulative = cz_process_infidelity(&gate, cz, &acc)?;
        log::info!("budget {label}: {single:.3e} (cumulative {cumulative:.3e})");
        rows.push(BudgetRow { channel: label.into(), infidelity: single, cumulative });
    }
    let all = rows.last().map(|r| r.cumulative).unwrap_or(control);
    rows.push(BudgetRow { channel: "all channels".into(), infidelity: all, cumulative: all });
    Ok(rows)
}

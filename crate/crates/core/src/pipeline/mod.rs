//! End-to-end experiments: gate optimisation, process tomography of the encode/CZ/decode chain,
//! Bell-state preparation with joint Wigner cuts, the error budget and the selective-pulse sweep.
//!
//! Mode layout of the full device is `Q1 ⊗ S1 ⊗ QC ⊗ S2 ⊗ Q2`. Each stage acts on its own
//! subsystem (`Q1 S1 S2 Q2` for encode/decode, `S1 QC S2` for CZ and Hadamard) and is embedded with
//! the idle modes as spectators.

mod bell;
mod budget;
mod gates;
mod qpt;
mod sweep;

pub use bell::{bell_target, run_bell, BellResult, BellStages};
pub use budget::{cz_process_infidelity, run_error_budget, BudgetRow, BUDGET_CHANNELS};
pub use gates::{optimize_gate, GateJob, GateKind};
pub use qpt::{qpt_logical_basis, run_qpt, Gate, QptOptions, QptResult, QptStages};
pub use sweep::{run_baseline_sweep, SweepOptions, SweepRow};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlledSystem, PulseSet};
use crate::error::{Error, Result};
use crate::hamiltonian::SystemSpec;
use crate::hilbert::{embed_modes, Operator};

pub const FULL_MODES: [&str; 5] = ["Q1", "S1", "QC", "S2", "Q2"];
pub const ENCODE_MODES: [&str; 4] = ["Q1", "S1", "S2", "Q2"];
pub const GATE_MODES: [&str; 3] = ["S1", "QC", "S2"];

/// Run configuration echoed into every report.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: String,
    pub truncation: Option<usize>,
    pub dt_ns: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config: RunConfig,
    pub scalars: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: RunConfig) -> Self {
        Self { experiment: experiment.into(), config, scalars: BTreeMap::new(), files: Vec::new(), wall_time_s: 0.0 }
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    /// `name,value` lines with shortest round-trip formatting.
    pub fn scalars_csv(&self) -> String {
        let mut s = String::from("name,value\n");
        for (k, v) in &self.scalars {
            let _ = writeln!(s, "{k},{v:?}");
        }
        s
    }

    /// Write `scalars.csv` and `report.json` into `dir`; returns the report path.
    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("scalars.csv"), self.scalars_csv())?;
        if !self.files.iter().any(|f| f == "scalars.csv") {
            self.files.push("scalars.csv".into());
        }
        let path = dir.join("report.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    /// Write a data file into `dir` and record it.
    pub fn emit(&mut self, dir: &Path, name: &str, contents: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), contents)?;
        self.files.push(name.into());
        Ok(())
    }
}

/// Parse `scalars.csv` back into a map.
pub fn read_scalars(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v = rec[1].parse().map_err(|e| Error::Parse(format!("{}: {e}", &rec[0])))?;
        out.insert(rec[0].to_string(), v);
    }
    Ok(out)
}

/// A stage is either an injected unitary on its subsystem or a pulse set driving it.
#[derive(Debug, Clone)]
pub enum Stage {
    Unitary(Operator),
    Pulses(PulseSet),
}

/// Modes named by `<mode>_I` / `<mode>_Q` pulse labels, in first-seen order.
pub fn driven_modes(pulses: &PulseSet) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for l in pulses.labels() {
        let mode = l
            .strip_suffix("_I")
            .or_else(|| l.strip_suffix("_Q"))
            .ok_or_else(|| Error::Parse(format!("pulse label `{l}` is not <mode>_I or <mode>_Q")))?;
        if !out.iter().any(|m| m == mode) {
            out.push(mode.to_string());
        }
    }
    Ok(out)
}

/// Subsystem `modes` of `full` driven on the modes named by the pulse labels.
pub fn stage_system(full: &SystemSpec, modes: &[&str], pulses: &PulseSet) -> Result<SystemSpec> {
    let driven = driven_modes(pulses)?;
    let driven: Vec<&str> = driven.iter().map(String::as_str).collect();
    if let Some(m) = driven.iter().find(|m| !modes.contains(m)) {
        return Err(Error::DimensionMismatch(format!("pulses drive `{m}`, which is not in stage modes {modes:?}")));
    }
    full.subsystem(modes, &driven)
}

impl Stage {
    /// Unitary of the stage on the subsystem `modes` of `full`.
    pub fn unitary(&self, full: &SystemSpec, modes: &[&str]) -> Result<Operator> {
        let dims: Vec<usize> = modes.iter().map(|m| full.mode(m).map(|s| s.dim)).collect::<Result<_>>()?;
        match self {
            Stage::Unitary(op) => {
                if op.dims() != dims.as_slice() {
                    return Err(Error::DimensionMismatch(format!(
                        "stage unitary dims {:?}, expected {dims:?} for {modes:?}",
                        op.dims()
                    )));
                }
                Ok(op.clone())
            }
            Stage::Pulses(p) => {
                let sub = stage_system(full, modes, p)?;
                let sys = ControlledSystem::from_system(&sub)?;
                Operator::new(dims, sys.propagator(p)?)
            }
        }
    }

    /// Stage unitary lifted to the whole of `full`.
    pub fn embedded(&self, full: &SystemSpec, modes: &[&str]) -> Result<Operator> {
        let u = self.unitary(full, modes)?;
        let idx: Vec<usize> = modes
            .iter()
            .map(|m| full.mode_index(m).ok_or_else(|| Error::Missing(format!("mode `{m}`"))))
            .collect::<Result<_>>()?;
        embed_modes(&u, &full.dims(), &idx)
    }

    pub fn duration(&self) -> f64 {
        match self {
            Stage::Unitary(_) => 0.0,
            Stage::Pulses(p) => p.duration(),
        }
    }
}

/// The full device with every cavity truncated to `truncation`.
pub fn device(system: &SystemSpec, truncation: usize) -> Result<SystemSpec> {
    system.subsystem(&FULL_MODES, &[])?.with_cavity_dim(truncation)
}

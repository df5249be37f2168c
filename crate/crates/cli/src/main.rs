//! `geophase` command-line driver. One experiment per invocation; every run writes CSV data and a
//! `report.json` into `--out`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geophase::dynamics::{ErrorChannelSet, PulseSet};
use geophase::grape::{ideal_cz, ideal_encode, ideal_hadamard, PulseShape};
use geophase::hamiltonian::{load_system, SystemSpec};
use geophase::hilbert::{self, LogicalLabel, StateVector};
use geophase::pipeline::{
    bell_target, device, optimize_gate, run_baseline_sweep, run_bell, run_error_budget, run_qpt, BellStages,
    BudgetRow, ExperimentReport, GateJob, GateKind, QptOptions, QptStages, RunConfig, Stage, SweepOptions, SweepRow,
    ENCODE_MODES, GATE_MODES,
};
use geophase::tomography::{wigner_joint, wigner_single, JointCut, WignerGrid};
use geophase::units::{mhz_to_rad, ns_to_s, us_to_s};
use geophase::{Error, C64};

#[derive(Parser)]
#[command(name = "geophase", version, about = "Geometric-phase gates on binomial-code cavities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// System profile: a TOML path or "paper".
    #[arg(long, default_value = "paper")]
    system: String,
    /// Pulse file, or a directory holding <stage>.csv files.
    #[arg(long)]
    pulses: Option<PathBuf>,
    /// Time step in ns.
    #[arg(long = "dt-ns", default_value_t = 2.0)]
    dt_ns: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cavity truncation (defaults depend on the experiment).
    #[arg(long)]
    truncation: Option<usize>,
    /// Post-select the coupler in |g⟩.
    #[arg(long)]
    postselect: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Cz,
    Encode,
    Decode,
    Hadamard,
    EncodeSingle,
}

#[derive(Clone, Copy, ValueEnum)]
enum QptGate {
    Identity,
    Cz,
}

#[derive(Subcommand)]
enum Command {
    /// GRAPE optimisation of one gate; writes <gate>.csv.
    Optimize {
        #[arg(value_enum)]
        gate: GateArg,
        #[command(flatten)]
        common: Common,
        /// Gate duration in ns (default: 1000 for cz/hadamard, 3000 for encode/decode).
        #[arg(long = "duration-ns")]
        duration_ns: Option<f64>,
        #[arg(long = "max-iters", default_value_t = 300)]
        max_iters: usize,
        /// Stop once the cost falls below this value.
        #[arg(long = "target-cost")]
        target_cost: Option<f64>,
        /// Amplitude bound in MHz.
        #[arg(long = "amp-max-mhz", default_value_t = 20.0)]
        amp_max_mhz: f64,
    },
    /// Process tomography of encode → (CZ) → decode.
    Qpt {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "cz")]
        gate: QptGate,
        /// Use ideal unitaries instead of pulses.
        #[arg(long)]
        ideal: bool,
        /// Enable every decoherence channel (slow on the full device).
        #[arg(long)]
        decoherence: bool,
    },
    /// Single-channel CZ infidelities.
    ErrorBudget {
        #[command(flatten)]
        common: Common,
        /// Override the S2 T2 in μs.
        #[arg(long = "s2-t2-us")]
        s2_t2_us: Option<f64>,
    },
    /// Bell-state preparation with joint Wigner cuts.
    Bell {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        ideal: bool,
        /// Half-width of the Wigner grids.
        #[arg(long, default_value_t = 2.0)]
        extent: f64,
        #[arg(long = "grid", default_value_t = 21)]
        grid: usize,
    },
    /// Selective-pulse CZ infidelity against duration.
    BaselineSweep {
        #[command(flatten)]
        common: Common,
        /// Durations in μs.
        #[arg(long = "durations-us", value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0])]
        durations_us: Vec<f64>,
        /// Skip the master-equation curve.
        #[arg(long)]
        unitary_only: bool,
        #[arg(long, value_enum, default_value = "gaussian")]
        shape: ShapeArg,
    },
    /// Wigner function of a reference state.
    Wigner {
        #[command(flatten)]
        common: Common,
        /// zero, one, plus, minus, plus-i, minus-i, fock:N, or bell (two-mode).
        #[arg(long, default_value = "zero")]
        state: String,
        #[arg(long, default_value_t = 2.5)]
        extent: f64,
        #[arg(long = "grid", default_value_t = 41)]
        grid: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Gaussian,
    Square,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(report) => {
            println!("{}", report.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

fn run_config(common: &Common, truncation: usize) -> RunConfig {
    RunConfig {
        system: common.system.clone(),
        truncation: Some(truncation),
        dt_ns: Some(common.dt_ns),
        seed: Some(common.seed),
    }
}

/// `path` itself when it is a file, otherwise `path/<name>.csv`.
fn pulse_file(path: &Path, name: &str) -> PathBuf {
    if path.is_dir() {
        path.join(format!("{name}.csv"))
    } else {
        path.to_path_buf()
    }
}

fn read_stage(common: &Common, name: &str) -> geophase::Result<Stage> {
    let dir = common.pulses.as_ref().ok_or_else(|| Error::Missing(format!("--pulses (needed for the {name} stage)")))?;
    let file = pulse_file(dir, name);
    if !file.exists() {
        return Err(Error::Missing(format!("pulse file {}", file.display())));
    }
    Ok(Stage::Pulses(PulseSet::read_csv(file)?))
}

fn ideal_stage(full: &SystemSpec, name: &str) -> geophase::Result<Stage> {
    let dims = |modes: &[&str]| -> geophase::Result<Vec<usize>> { modes.iter().map(|m| Ok(full.mode(m)?.dim)).collect() };
    let op = match name {
        "encode" => ideal_encode(&dims(&ENCODE_MODES)?)?,
        "decode" => ideal_encode(&dims(&ENCODE_MODES)?)?.adjoint(),
        "cz" => ideal_cz(&dims(&GATE_MODES)?)?,
        _ => ideal_hadamard(&dims(&GATE_MODES)?)?,
    };
    Ok(Stage::Unitary(op))
}

fn run(command: Command) -> geophase::Result<PathBuf> {
    let started = Instant::now();
    match command {
        Command::Optimize { gate, common, duration_ns, max_iters, target_cost, amp_max_mhz } => {
            let kind = match gate {
                GateArg::Cz => GateKind::Cz,
                GateArg::Encode => GateKind::Encode,
                GateArg::Decode => GateKind::Decode,
                GateArg::Hadamard => GateKind::Hadamard,
                GateArg::EncodeSingle => GateKind::EncodeSingle,
            };
            let system = load_system(&common.system)?;
            let mut job = GateJob::new(kind);
            if let Some(d) = duration_ns {
                job.duration = ns_to_s(d);
            }
            if let Some(t) = common.truncation {
                job.truncation = t;
            }
            job.dt = ns_to_s(common.dt_ns);
            job.config.max_iters = max_iters;
            job.config.target_cost = target_cost;
            job.config.amp_max = mhz_to_rad(amp_max_mhz);
            job.config.seed = common.seed;
            let (result, grape_report) = optimize_gate(&system, &job)?;
            let mut rep = ExperimentReport::new(&format!("optimize-{}", kind.name()), run_config(&common, job.truncation));
            rep.emit(&common.out, &format!("{}.csv", kind.name()), &result.pulses.to_csv_string()?)?;
            grape_report.write(common.out.join("grape_report.json"))?;
            rep.files.push("grape_report.json".into());
            rep.scalar("mean_fidelity", result.mean_fidelity());
            rep.scalar("coherent_fidelity", result.coherent_fidelity);
            rep.scalar("final_cost", *result.history.last().unwrap_or(&f64::NAN));
            rep.scalar("iterations", (result.history.len() - 1) as f64);
            rep.wall_time_s = started.elapsed().as_secs_f64();
            rep.write(&common.out)
        }
        Command::Qpt { common, gate, ideal, decoherence } => {
            let system = load_system(&common.system)?;
            let truncation = common.truncation.unwrap_or(8);
            let full = device(&system, truncation)?;
            let stage = |name: &str| if ideal { ideal_stage(&full, name) } else { read_stage(&common, name) };
            let gate = match gate {
                QptGate::Identity => geophase::pipeline::Gate::Identity,
                QptGate::Cz => geophase::pipeline::Gate::Cz,
            };
            let stages = QptStages {
                encode: stage("encode")?,
                decode: stage("decode")?,
                cz: if gate == geophase::pipeline::Gate::Cz { Some(stage("cz")?) } else { None },
            };
            let opts = QptOptions {
                truncation,
                channels: if decoherence { ErrorChannelSet::all(&system) } else { ErrorChannelSet::none() },
                postselect: common.postselect,
            };
            let result = run_qpt(&system, gate, &stages, &opts)?;
            result.write(&common.out, run_config(&common, truncation), started)?;
            Ok(common.out.join("report.json"))
        }
        Command::ErrorBudget { common, s2_t2_us } => {
            let mut system = load_system(&common.system)?;
            if let Some(t2) = s2_t2_us {
                system = system.with_t2("S2", us_to_s(t2))?;
            }
            let truncation = common.truncation.unwrap_or(5);
            let cz = match read_stage(&common, "cz")? {
                Stage::Pulses(p) => p,
                Stage::Unitary(_) => unreachable!(),
            };
            let rows = run_error_budget(&system, &cz, truncation)?;
            let mut rep = ExperimentReport::new("error-budget", run_config(&common, truncation));
            rep.emit(&common.out, "budget.csv", &BudgetRow::to_csv(&rows))?;
            for r in &rows {
                let key = r.channel.replace(' ', "_");
                rep.scalar(&format!("{key}_infidelity"), r.infidelity);
                rep.scalar(&format!("{key}_cumulative"), r.cumulative);
            }
            rep.wall_time_s = started.elapsed().as_secs_f64();
            rep.write(&common.out)
        }
        Command::Bell { common, ideal, extent, grid } => {
            let system = load_system(&common.system)?;
            let truncation = common.truncation.unwrap_or(8);
            let full = device(&system, truncation)?;
            let stage = |name: &str| if ideal { ideal_stage(&full, name) } else { read_stage(&common, name) };
            let stages = BellStages { encode: stage("encode")?, cz: stage("cz")?, hadamard: stage("hadamard")? };
            let cuts = [
                JointCut::RealAxes { extent, n: grid },
                JointCut::ImagAxes { extent, n: grid },
                JointCut::FixBeta1 { beta1: (0.0, 0.0), extent, n: grid },
            ];
            let result = run_bell(&system, &stages, truncation, &cuts)?;
            result.write(&common.out, run_config(&common, truncation), started)?;
            Ok(common.out.join("report.json"))
        }
        Command::BaselineSweep { common, durations_us, unitary_only, shape } => {
            let system = load_system(&common.system)?;
            let truncation = common.truncation.unwrap_or(5);
            let opts = SweepOptions {
                dt: ns_to_s(common.dt_ns),
                shape: match shape {
                    ShapeArg::Gaussian => PulseShape::Gaussian,
                    ShapeArg::Square => PulseShape::Square,
                },
                cavity_dim: truncation,
                channels: if unitary_only { None } else { Some(ErrorChannelSet::all(&system)) },
            };
            let durations: Vec<f64> = durations_us.iter().map(|d| us_to_s(*d)).collect();
            let rows = run_baseline_sweep(&system, &durations, &opts)?;
            let mut rep = ExperimentReport::new("baseline-sweep", run_config(&common, truncation));
            rep.emit(&common.out, "baseline_sweep.csv", &SweepRow::to_csv(&rows))?;
            for r in &rows {
                rep.scalar(&format!("unitary_infidelity_{}us", r.duration_us), r.unitary_infidelity);
                if let Some(d) = r.decoherent_infidelity {
                    rep.scalar(&format!("decoherent_infidelity_{}us", r.duration_us), d);
                }
            }
            rep.wall_time_s = started.elapsed().as_secs_f64();
            rep.write(&common.out)
        }
        Command::Wigner { common, state, extent, grid } => {
            let dim = common.truncation.unwrap_or(40);
            let grid_pts = WignerGrid::square(extent, grid);
            let w = if state == "bell" {
                let b = bell_target(dim, dim)?;
                let pts: Vec<(C64, C64)> = JointCut::RealAxes { extent, n: grid }.points();
                wigner_joint(&b.projector(), (dim, dim), ("S1", "S2"), &pts)?
            } else {
                let psi = single_state(&state, dim)?;
                wigner_single(&psi.projector(), "S", &grid_pts)?
            };
            let mut rep = ExperimentReport::new("wigner", run_config(&common, dim));
            rep.emit(&common.out, "wigner.csv", &w.to_csv_string())?;
            rep.scalar("max_abs_w", w.max_abs());
            rep.wall_time_s = started.elapsed().as_secs_f64();
            rep.write(&common.out)
        }
    }
}

fn single_state(name: &str, dim: usize) -> geophase::Result<StateVector> {
    if let Some(n) = name.strip_prefix("fock:") {
        let n: usize = n.parse().map_err(|_| Error::Parse(format!("bad Fock index `{n}`")))?;
        return hilbert::fock_state(dim, n);
    }
    let label = match name {
        "zero" => LogicalLabel::G,
        "one" => LogicalLabel::E,
        "plus" => LogicalLabel::Plus,
        "minus" => LogicalLabel::Minus,
        "plus-i" => LogicalLabel::PlusI,
        "minus-i" => LogicalLabel::MinusI,
        other => return Err(Error::Parse(format!("unknown state `{other}`"))),
    };
    hilbert::logical_state(label, dim)
}

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_geophase"));
    c.env("RUST_LOG", "error");
    c
}

fn out_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("geophase-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn scalars(dir: &PathBuf) -> std::collections::BTreeMap<String, f64> {
    geophase::pipeline::read_scalars(dir.join("scalars.csv")).unwrap()
}

#[test]
fn ideal_qpt_reports_unit_fidelity() {
    let out = out_dir("qpt");
    let status = bin()
        .args(["qpt", "--ideal", "--gate", "cz", "--truncation", "5", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let s = scalars(&out);
    assert!((s["f_full"] - 1.0).abs() < 1e-8, "{s:?}");
    assert!(out.join("ptm_full.csv").exists() && out.join("report.json").exists());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "qpt");
    assert_eq!(report["config"]["truncation"], 5);
}

#[test]
fn wigner_of_vacuum() {
    let out = out_dir("wigner");
    let status = bin()
        .args(["wigner", "--state", "fock:0", "--extent", "1", "--grid", "3", "--truncation", "20", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(out.join("wigner.csv")).unwrap();
    let centre = text.lines().nth(5).unwrap();
    let w: f64 = centre.rsplit(',').next().unwrap().parse().unwrap();
    assert!((w - 2.0 / std::f64::consts::PI).abs() < 1e-10, "{centre}");
}

#[test]
fn config_errors_exit_with_2() {
    let out = out_dir("errors");
    let missing_pulses = bin().args(["qpt", "--out"]).arg(&out).status().unwrap();
    assert_eq!(missing_pulses.code(), Some(2));
    let bad_system = bin()
        .args(["bell", "--ideal", "--system", "/nonexistent/system.toml", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(bad_system.code(), Some(2));
    let bad_state = bin().args(["wigner", "--state", "cat", "--out"]).arg(&out).status().unwrap();
    assert_eq!(bad_state.code(), Some(2));
}

#[test]
fn optimize_writes_pulses_that_load_back() {
    let out = out_dir("optimize");
    let status = bin()
        .args(["optimize", "cz", "--duration-ns", "200", "--max-iters", "3", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let p = geophase::dynamics::PulseSet::read_csv(out.join("cz.csv")).unwrap();
    assert_eq!(p.n_steps(), 100);
    assert_eq!(p.labels(), ["QC_I", "QC_Q"]);
    assert!(out.join("grape_report.json").exists());
}

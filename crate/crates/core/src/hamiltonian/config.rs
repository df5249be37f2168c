//! TOML system description.
//!
//! ```toml
//! [[mode]]
//! label = "S1"
//! kind = "cavity"        # or "qubit"
//! dim = 8
//! freq_GHz = 6.1453
//! self_kerr_MHz = 0.00232
//! T1_us = 1503.0
//! T2_us = 2017.0
//!
//! [[coupling]]
//! a = "S1"
//! b = "QC"
//! chi_MHz = 0.594
//!
//! [drives]
//! targets = ["QC"]
//! ```
//!
//! All Kerr values are positive magnitudes; frequencies are linear and converted with [`crate::units`].

use std::path::Path;

use serde::Deserialize;

use super::{CouplingSpec, ModeKind, ModeSpec, SystemSpec};
use crate::error::{Error, Result};
use crate::units::{ghz_to_rad, mhz_to_rad, us_to_s};

pub const PAPER_PROFILE_TOML: &str = include_str!("../../profiles/paper.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    #[serde(default)]
    mode: Vec<RawMode>,
    #[serde(default)]
    coupling: Vec<RawCoupling>,
    drives: Option<RawDrives>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawMode {
    label: Option<String>,
    kind: Option<String>,
    dim: Option<i64>,
    freq_GHz: Option<f64>,
    self_kerr_MHz: Option<f64>,
    anharmonicity_MHz: Option<f64>,
    T1_us: Option<f64>,
    T2_us: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawCoupling {
    a: Option<String>,
    b: Option<String>,
    chi_MHz: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrives {
    #[serde(default)]
    targets: Vec<String>,
}

fn required<T>(value: Option<T>, path: String) -> Result<T> {
    value.ok_or_else(|| Error::schema(path, "missing required field"))
}

/// Parse a system description. The literal `"paper"` selects the bundled device profile.
pub fn load_system_str(document: &str) -> Result<SystemSpec> {
    let raw: RawDocument =
        toml::from_str(document).map_err(|e| Error::schema("<document>", e.message().to_string()))?;
    if raw.mode.is_empty() {
        return Err(Error::schema("mode", "at least one [[mode]] is required"));
    }
    let mut modes = Vec::with_capacity(raw.mode.len());
    for (i, m) in raw.mode.into_iter().enumerate() {
        let p = |f: &str| format!("mode[{i}].{f}");
        let label = required(m.label, p("label"))?;
        let kind = match required(m.kind, p("kind"))?.as_str() {
            "cavity" => ModeKind::Cavity,
            "qubit" => ModeKind::Qubit,
            other => return Err(Error::schema(p("kind"), format!("unknown kind `{other}`"))),
        };
        let dim = match (kind, m.dim) {
            (ModeKind::Qubit, None) => 2,
            (_, Some(d)) if d >= 2 => d as usize,
            (_, Some(_)) => return Err(Error::schema(p("dim"), "dimension must be at least 2")),
            (ModeKind::Cavity, None) => return Err(Error::schema(p("dim"), "missing required field")),
        };
        let t1 = required(m.T1_us, p("T1_us"))?;
        let t2 = required(m.T2_us, p("T2_us"))?;
        if t1 <= 0.0 {
            return Err(Error::schema(p("T1_us"), "time constant must be positive"));
        }
        if t2 <= 0.0 {
            return Err(Error::schema(p("T2_us"), "time constant must be positive"));
        }
        let self_kerr = m.self_kerr_MHz.unwrap_or(0.0);
        if self_kerr < 0.0 {
            return Err(Error::schema(p("self_kerr_MHz"), "store the positive magnitude"));
        }
        modes.push(ModeSpec {
            label,
            kind,
            dim,
            frequency: ghz_to_rad(m.freq_GHz.unwrap_or(0.0)),
            self_kerr: mhz_to_rad(self_kerr),
            anharmonicity: m.anharmonicity_MHz.map(mhz_to_rad),
            t1: us_to_s(t1),
            t2: us_to_s(t2),
        });
    }
    let mut couplings = Vec::with_capacity(raw.coupling.len());
    for (i, c) in raw.coupling.into_iter().enumerate() {
        let p = |f: &str| format!("coupling[{i}].{f}");
        couplings.push(CouplingSpec {
            mode_a: required(c.a, p("a"))?,
            mode_b: required(c.b, p("b"))?,
            chi: mhz_to_rad(required(c.chi_MHz, p("chi_MHz"))?),
        });
    }
    let targets = raw.drives.map(|d| d.targets).unwrap_or_default();
    SystemSpec::new(modes, couplings, targets)
}

/// Load from a path, or the bundled profile when `source == "paper"`.
pub fn load_system(source: &str) -> Result<SystemSpec> {
    if source == "paper" {
        return Ok(paper_profile());
    }
    let text = std::fs::read_to_string(Path::new(source))
        .map_err(|e| Error::Missing(format!("system file `{source}`: {e}")))?;
    load_system_str(&text)
}

/// The bundled five-mode device profile (Q1, S1, QC, S2, Q2).
pub fn paper_profile() -> SystemSpec {
    load_system_str(PAPER_PROFILE_TOML).expect("bundled profile is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{rad_to_mhz, s_to_us};

    #[test]
    fn paper_profile_values() {
        let sys = paper_profile();
        assert_eq!(sys.labels(), vec!["Q1", "S1", "QC", "S2", "Q2"]);
        assert!((rad_to_mhz(sys.chi("S1", "QC")) - 0.594).abs() < 1e-12);
        assert!((rad_to_mhz(sys.chi("QC", "S2")) - 3.104).abs() < 1e-12);
        assert!((rad_to_mhz(sys.chi("S2", "QC")) - 3.104).abs() < 1e-12);
        assert!((rad_to_mhz(sys.chi("S1", "S2")) - 0.00955).abs() < 1e-12);
        let s2 = sys.mode("S2").unwrap();
        assert!((rad_to_mhz(s2.self_kerr) - 0.02810).abs() < 1e-12);
        assert!((s_to_us(s2.t2) - 219.0).abs() < 1e-9);
        assert_eq!(sys.mode("QC").unwrap().self_kerr, 0.0);
        assert!((rad_to_mhz(sys.mode("QC").unwrap().anharmonicity.unwrap()) - 153.0).abs() < 1e-9);
    }

    #[test]
    fn load_via_source_name() {
        assert_eq!(load_system("paper").unwrap(), paper_profile());
    }

    #[test]
    fn missing_t1_is_named() {
        let doc = r#"
[[mode]]
label = "S"
kind = "cavity"
dim = 4
T2_us = 10.0
"#;
        let err = load_system_str(doc).unwrap_err();
        assert!(err.to_string().contains("T1"), "{err}");
    }

    #[test]
    fn duplicate_label_and_negative_time() {
        let dup = r#"
[[mode]]
label = "Q"
kind = "qubit"
T1_us = 10.0
T2_us = 10.0
[[mode]]
label = "Q"
kind = "qubit"
T1_us = 10.0
T2_us = 10.0
"#;
        let err = load_system_str(dup).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let neg = r#"
[[mode]]
label = "Q"
kind = "qubit"
T1_us = -1.0
T2_us = 10.0
"#;
        let err = load_system_str(neg).unwrap_err();
        assert!(err.to_string().contains("mode[0].T1_us"), "{err}");
    }

    #[test]
    fn unknown_coupling_mode() {
        let doc = r#"
[[mode]]
label = "Q"
kind = "qubit"
T1_us = 10.0
T2_us = 10.0
[[coupling]]
a = "Q"
b = "X"
chi_MHz = 1.0
"#;
        let err = load_system_str(doc).unwrap_err();
        assert!(err.to_string().contains("coupling[0].b"), "{err}");
    }
}

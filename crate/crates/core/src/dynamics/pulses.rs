//! Piecewise-constant control amplitudes and their CSV form.
//!
//! The file header is `t_ns,<label>_MHz,...` where `<label>` is a control label such as `QC_I`.
//! Each row holds the amplitudes of one step and `t_ns` is the step's end time, so the first row
//! alone fixes `dt`. Amplitudes are linear MHz on file and rad/s in memory.

use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{mhz_to_rad, ns_to_s, rad_to_mhz, s_to_ns};

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSet {
    dt: f64,
    labels: Vec<String>,
    amplitudes: Vec<Vec<f64>>,
    amp_max: Option<f64>,
}

impl PulseSet {
    pub fn new(dt: f64, labels: Vec<String>, amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self { dt, labels, amplitudes, amp_max: None };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(dt: f64, labels: Vec<String>, n_steps: usize) -> Result<Self> {
        let amplitudes = vec![vec![0.0; n_steps]; labels.len()];
        Self::new(dt, labels, amplitudes)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidDimension(format!("dt must be positive, got {}", self.dt)));
        }
        if self.labels.len() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} amplitude arrays",
                self.labels.len(),
                self.amplitudes.len()
            )));
        }
        let n = self.n_steps();
        for (label, row) in self.labels.iter().zip(&self.amplitudes) {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!("control `{label}` has {} steps, expected {n}", row.len())));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse(format!("control `{label}` has non-finite amplitudes")));
            }
            if let Some(bound) = self.amp_max {
                if let Some(x) = row.iter().find(|x| x.abs() > bound) {
                    return Err(Error::Unphysical(format!("control `{label}` amplitude {x:e} exceeds bound {bound:e}")));
                }
            }
        }
        Ok(())
    }

    /// Declare an amplitude bound (rad/s); fails if already violated.
    pub fn with_amp_max(mut self, bound: f64) -> Result<Self> {
        if !(bound > 0.0) {
            return Err(Error::InvalidDimension("amplitude bound must be positive".into()));
        }
        self.amp_max = Some(bound);
        self.validate()?;
        Ok(self)
    }

    pub fn amp_max(&self) -> Option<f64> {
        self.amp_max
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.amplitudes.first().map_or(0, Vec::len)
    }

    pub fn n_controls(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Vec<f64>] {
        &self.amplitudes
    }

    /// Amplitudes of every control at one step.
    pub fn step(&self, k: usize) -> Vec<f64> {
        self.amplitudes.iter().map(|row| row[k]).collect()
    }

    /// Replace the amplitudes (same shape), keeping dt, labels and bound.
    pub fn with_amplitudes(&self, amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self { amplitudes, ..self.clone() };
        p.validate()?;
        Ok(p)
    }

    /// Flatten control-major: index `j * n_steps + k`.
    pub fn flatten(&self) -> Vec<f64> {
        self.amplitudes.concat()
    }

    pub fn from_flat(&self, x: &[f64]) -> Result<Self> {
        let n = self.n_steps();
        if x.len() != n * self.n_controls() {
            return Err(Error::DimensionMismatch(format!("flat vector of length {}", x.len())));
        }
        self.with_amplitudes(x.chunks(n.max(1)).map(<[f64]>::to_vec).collect())
    }

    /// Pulses `self` followed by `other` (same dt and labels).
    pub fn concat(&self, other: &PulseSet) -> Result<Self> {
        if self.labels != other.labels || self.dt != other.dt {
            return Err(Error::DimensionMismatch("concatenated pulses need equal dt and labels".into()));
        }
        let amplitudes = self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| [a.as_slice(), b].concat()).collect();
        Self::new(self.dt, self.labels.clone(), amplitudes)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t_ns".to_string()];
        header.extend(self.labels.iter().map(|l| format!("{l}_MHz")));
        w.write_record(&header)?;
        let dt_ns = s_to_ns(self.dt);
        for k in 0..self.n_steps() {
            let mut row = vec![format!("{:.6}", dt_ns * (k + 1) as f64)];
            row.extend(self.amplitudes.iter().map(|a| format!("{:.12e}", rad_to_mhz(a[k]))));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = r.headers()?.clone();
        if header.get(0) != Some("t_ns") {
            return Err(Error::Parse("pulse file must start with a `t_ns` column".into()));
        }
        let mut labels = Vec::new();
        for h in header.iter().skip(1) {
            let label = h
                .strip_suffix("_MHz")
                .ok_or_else(|| Error::Parse(format!("pulse column `{h}` lacks the `_MHz` suffix")))?;
            labels.push(label.to_string());
        }
        let mut amplitudes = vec![Vec::new(); labels.len()];
        let mut first_t = None;
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != labels.len() + 1 {
                return Err(Error::Parse(format!("row {} has {} fields", line + 1, rec.len())));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", line + 1)));
            let t = parse(&rec[0])?;
            first_t.get_or_insert(t);
            for (j, field) in rec.iter().skip(1).enumerate() {
                amplitudes[j].push(mhz_to_rad(parse(field)?));
            }
        }
        let dt_ns = first_t.ok_or_else(|| Error::Parse("pulse file has no rows".into()))?;
        Self::new(ns_to_s(dt_ns), labels, amplitudes)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

//! Frequency-selective 2π coupler rotation: the naive geometric phase gate.
//!
//! A single tone at the target sector's detuning drives one full Rabi cycle there, imprinting a
//! geometric phase π; other sectors are off resonance and (for slow pulses) return almost
//! unchanged.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::PulseSet;
use crate::error::{Error, Result};
use crate::hamiltonian::BlockSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    /// Truncated Gaussian with σ = duration/6.
    Gaussian,
    Square,
}

/// Envelope value at time `t` of a pulse of length `duration` (peak 1).
fn envelope(shape: PulseShape, t: f64, duration: f64) -> f64 {
    match shape {
        PulseShape::Square => 1.0,
        PulseShape::Gaussian => {
            let sigma = duration / 6.0;
            (-0.5 * ((t - 0.5 * duration) / sigma).powi(2)).exp()
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Coupler I/Q pulses for a 2π rotation resonant with sector `target`.
///
/// With `ε_I + iε_Q = (Ω/2) e^{−iΔt}` the sector sees `(Ω/2) σ_x` in the frame rotating at its
/// detuning Δ. Each piecewise-constant step samples the tone at its midpoint and is divided by
/// `sinc(Δ dt/2)`, the attenuation of a held sample, so that `Σ Ω_k dt = 2π` holds for the
/// resonant component. The amplitude enters that condition linearly and is solved directly.
pub fn selective_baseline(
    blocks: &BlockSystem,
    target: (usize, usize),
    shape: PulseShape,
    duration: f64,
    dt: f64,
) -> Result<PulseSet> {
    if !(duration > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidDimension("duration and dt must be positive".into()));
    }
    let sector = blocks
        .sector(target)
        .ok_or_else(|| Error::Missing(format!("sector {target:?}")))?;
    let n = ((duration / dt).round() as usize).max(1);
    let dt = duration / n as f64;
    let delta = sector.detuning;
    let shape_vals: Vec<f64> = (0..n).map(|k| envelope(shape, (k as f64 + 0.5) * dt, duration)).collect();
    let area: f64 = shape_vals.iter().sum::<f64>() * dt;
    let peak = 2.0 * PI / area;
    let hold = sinc(0.5 * delta * dt);
    let mut i_amp = Vec::with_capacity(n);
    let mut q_amp = Vec::with_capacity(n);
    for (k, s) in shape_vals.iter().enumerate() {
        let t = (k as f64 + 0.5) * dt;
        let half = 0.5 * peak * s / hold;
        i_amp.push(half * (delta * t).cos());
        q_amp.push(-half * (delta * t).sin());
    }
    PulseSet::new(dt, vec![format!("{}_I", blocks.coupler), format!("{}_Q", blocks.coupler)], vec![i_amp, q_amp])
}

//! Conversions between file units (linear MHz/GHz, ns, μs) and internal SI angular units.

use std::f64::consts::TAU;

/// Linear frequency in MHz to angular frequency in rad/s.
pub fn mhz_to_rad(mhz: f64) -> f64 {
    mhz * TAU * 1e6
}

pub fn rad_to_mhz(rad_per_s: f64) -> f64 {
    rad_per_s / (TAU * 1e6)
}

pub fn ghz_to_rad(ghz: f64) -> f64 {
    ghz * TAU * 1e9
}

pub fn rad_to_ghz(rad_per_s: f64) -> f64 {
    rad_per_s / (TAU * 1e9)
}

pub fn us_to_s(us: f64) -> f64 {
    us * 1e-6
}

pub fn s_to_us(s: f64) -> f64 {
    s * 1e6
}

pub fn ns_to_s(ns: f64) -> f64 {
    ns * 1e-9
}

pub fn s_to_ns(s: f64) -> f64 {
    s * 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mhz_round_trip() {
        let x = 3.104;
        assert!((rad_to_mhz(mhz_to_rad(x)) - x).abs() < 1e-15);
        assert!((mhz_to_rad(1.0) - 2.0 * std::f64::consts::PI * 1e6).abs() < 1e-6);
    }
}

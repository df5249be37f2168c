//! Two-ancilla readout: joint displaced-parity outcomes, Bayesian correction, shot emulation.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::hilbert::Displacer;
use crate::linalg::{CMatrix, C64};

/// Outcome order of every 4-vector: ancilla 1 then ancilla 2.
pub const OUTCOMES: [&str; 4] = ["gg", "ge", "eg", "ee"];

/// Readout confusion matrix: `B[(measured, prepared)]`, columns sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesMatrix {
    matrix: Matrix4<f64>,
}

impl BayesMatrix {
    pub fn new(matrix: Matrix4<f64>) -> Result<Self> {
        if matrix.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
            return Err(Error::Unphysical("Bayes matrix entries must lie in [0, 1]".into()));
        }
        for j in 0..4 {
            let s = matrix.column(j).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::Unphysical(format!("Bayes matrix column {j} sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: Matrix4::identity() }
    }

    /// Independent symmetric misassignment `p` on each ancilla.
    pub fn symmetric(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Unphysical(format!("misassignment probability {p}")));
        }
        let single = nalgebra::Matrix2::new(1.0 - p, p, p, 1.0 - p);
        Self::new(single.kronecker(&single).fixed_view::<4, 4>(0, 0).into_owned())
    }

    /// Default used for emulation: 2 % per ancilla.
    pub fn default_emulation() -> Self {
        Self::symmetric(0.02).expect("valid probability")
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn apply(&self, p: &[f64; 4]) -> [f64; 4] {
        (self.matrix * Vector4::from_column_slice(p)).into()
    }

    /// 2-norm condition number.
    pub fn condition_number(&self) -> f64 {
        let s = self.matrix.singular_values();
        s.max() / s.min()
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("measured\\prepared");
        for o in OUTCOMES {
            let _ = write!(s, ",{o}");
        }
        s.push('\n');
        for (i, o) in OUTCOMES.iter().enumerate() {
            s.push_str(o);
            for j in 0..4 {
                let _ = write!(s, ",{:.12e}", self.matrix[(i, j)]);
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        if header != OUTCOMES {
            return Err(Error::Parse(format!("Bayes matrix header {header:?}, expected {OUTCOMES:?}")));
        }
        let mut m = Matrix4::zeros();
        let mut rows = 0;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if i >= 4 || rec.get(0) != Some(OUTCOMES[i]) || rec.len() != 5 {
                return Err(Error::Parse(format!("unexpected Bayes matrix row {}", i + 1)));
            }
            for j in 0..4 {
                m[(i, j)] = rec[j + 1].trim().parse().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            }
            rows += 1;
        }
        if rows != 4 {
            return Err(Error::Parse(format!("Bayes matrix has {rows} rows")));
        }
        Self::new(m)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

/// Joint displacement applied before the two parity maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParitySetting {
    pub beta1: C64,
    pub beta2: C64,
}

/// POVM elements `D (Π_a ⊗ Π_b) D†` for the four outcomes; ancilla `g` reports even parity.
pub fn parity_effects(dims: (usize, usize), setting: ParitySetting) -> [CMatrix; 4] {
    let (d1, d2) = dims;
    let d = Displacer::new(d1).matrix(setting.beta1).kronecker(&Displacer::new(d2).matrix(setting.beta2));
    let mut out: [CMatrix; 4] = std::array::from_fn(|_| CMatrix::zeros(d1 * d2, d1 * d2));
    for k in 0..d1 * d2 {
        let outcome = 2 * ((k / d2) % 2) + (k % d2) % 2;
        let col = d.column(k);
        out[outcome] += col * col.adjoint();
    }
    out
}

/// Exact outcome probabilities `Tr[E_k ρ]` for one parity setting.
pub fn outcome_probabilities(rho: &CMatrix, dims: (usize, usize), setting: ParitySetting) -> Result<[f64; 4]> {
    let n = dims.0 * dims.1;
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch(format!("{}x{} state for dims {dims:?}", rho.nrows(), rho.ncols())));
    }
    let effects = parity_effects(dims, setting);
    Ok(std::array::from_fn(|k| crate::linalg::trace_product(&effects[k], rho).re.clamp(0.0, 1.0)))
}

/// Multinomial sample of `shots` outcomes after readout corruption by `bayes`.
pub fn emulate_outcomes(
    rho: &CMatrix,
    dims: (usize, usize),
    setting: ParitySetting,
    shots: u64,
    bayes: &BayesMatrix,
    seed: u64,
) -> Result<[u64; 4]> {
    if shots == 0 {
        return Err(Error::InvalidDimension("shots must be positive".into()));
    }
    let measured = bayes.apply(&outcome_probabilities(rho, dims, setting)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    let mut remaining = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        if remaining == 0 {
            break;
        }
        let p = if mass > 0.0 { (measured[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, p).map_err(|e| Error::Unphysical(e.to_string()))?.sample(&mut rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= measured[k];
    }
    counts[3] = remaining;
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub probabilities: [f64; 4],
    pub condition_number: f64,
    /// True when the unconstrained solution left the simplex and was projected.
    pub constrained: bool,
}

/// Solve `B p = p_meas` with `p` on the probability simplex.
///
/// The unconstrained inverse is returned when it is already feasible. Otherwise the least-squares
/// problem over the simplex is solved exactly by enumerating supports: on each face the
/// equality-constrained optimum follows from a small KKT system, and the best non-negative
/// candidate wins.
pub fn bayes_correct(measured: &[f64; 4], bayes: &BayesMatrix) -> Result<Correction> {
    let total: f64 = measured.iter().sum();
    if !(total > 0.0) || measured.iter().any(|v| *v < 0.0) {
        return Err(Error::Unphysical(format!("measured distribution {measured:?}")));
    }
    let m = Vector4::from_column_slice(measured) / total;
    let cond = bayes.condition_number();
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::Singular(format!("Bayes matrix condition number {cond:e}")));
    }
    let b = bayes.matrix();
    let p = b.lu().solve(&m).ok_or_else(|| Error::Singular("Bayes matrix".into()))?;
    if p.iter().all(|v| *v >= 0.0) {
        return Ok(Correction { probabilities: p.into(), condition_number: cond, constrained: false });
    }

    let mut best: Option<(f64, Vector4<f64>)> = None;
    for mask in 1u32..16 {
        let support: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let k = support.len();
        // [2 BsᵀBs  1; 1ᵀ 0] [q; μ] = [2 Bsᵀm; 1]
        let mut kkt = nalgebra::DMatrix::zeros(k + 1, k + 1);
        let mut rhs = nalgebra::DVector::zeros(k + 1);
        for (a, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                kkt[(a, c)] = 2.0 * b.column(i).dot(&b.column(j));
            }
            kkt[(a, k)] = 1.0;
            kkt[(k, a)] = 1.0;
            rhs[a] = 2.0 * b.column(i).dot(&m);
        }
        rhs[k] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        if sol.rows(0, k).iter().any(|v| *v < -1e-14) {
            continue;
        }
        let mut q = Vector4::zeros();
        for (a, &i) in support.iter().enumerate() {
            q[i] = sol[a].max(0.0);
        }
        q /= q.sum();
        let r = (b * q - m).norm_squared();
        if best.as_ref().is_none_or(|(rb, _)| r < *rb) {
            best = Some((r, q));
        }
    }
    let (_, q) = best.ok_or_else(|| Error::Singular("no feasible simplex solution".into()))?;
    Ok(Correction { probabilities: q.into(), condition_number: cond, constrained: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::fock_state;

    #[test]
    fn symmetric_default_is_column_stochastic() {
        let b = BayesMatrix::default_emulation();
        for j in 0..4 {
            assert!((b.matrix().column(j).sum() - 1.0).abs() < 1e-12);
        }
        assert!((b.matrix()[(0, 0)] - 0.98 * 0.98).abs() < 1e-12);
        assert!((b.matrix()[(1, 0)] - 0.98 * 0.02).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let b = BayesMatrix::symmetric(0.037).unwrap();
        let back = BayesMatrix::from_csv_str(&b.to_csv_string()).unwrap();
        assert!((back.matrix() - b.matrix()).abs().max() < 1e-12);
        assert!(BayesMatrix::from_csv_str("x,gg,ge,eg,ee\ngg,1,0,0,0\n").is_err());
    }

    #[test]
    fn rejects_non_stochastic() {
        let mut m = Matrix4::identity();
        m[(1, 0)] = 0.1;
        assert!(BayesMatrix::new(m).is_err());
    }

    #[test]
    fn identity_correction_is_noop() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let c = bayes_correct(&p, &BayesMatrix::identity()).unwrap();
        for (x, y) in c.probabilities.iter().zip(&p) {
            assert!((x - y).abs() < 1e-15);
        }
        assert!(!c.constrained);
    }

    #[test]
    fn round_trip_interior() {
        let b = BayesMatrix::symmetric(0.05).unwrap();
        let p = [0.4, 0.1, 0.2, 0.3];
        let c = bayes_correct(&b.apply(&p), &b).unwrap();
        for (x, y) in c.probabilities.iter().zip(&p) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn vacuum_reports_gg() {
        let v = fock_state(8, 0).unwrap();
        let rho = v.tensor(&v).projector();
        let s = ParitySetting { beta1: C64::from(0.0), beta2: C64::from(0.0) };
        let counts = emulate_outcomes(&rho, (8, 8), s, 1_000_000, &BayesMatrix::identity(), 3).unwrap();
        assert_eq!(counts, [1_000_000, 0, 0, 0]);
    }

    #[test]
    fn emulation_is_seeded() {
        let v = fock_state(8, 0).unwrap();
        let rho = v.tensor(&v).projector();
        let s = ParitySetting { beta1: C64::new(0.4, 0.1), beta2: C64::new(-0.3, 0.2) };
        let b = BayesMatrix::default_emulation();
        let a = emulate_outcomes(&rho, (8, 8), s, 10_000, &b, 11).unwrap();
        assert_eq!(a, emulate_outcomes(&rho, (8, 8), s, 10_000, &b, 11).unwrap());
        assert_eq!(a.iter().sum::<u64>(), 10_000);
    }
}

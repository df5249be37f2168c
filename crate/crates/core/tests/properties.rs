//! Randomised invariants.

use geophase::dynamics::{ControlledSystem, PulseSet};
use geophase::grape::{ConstraintKind, ConstraintPair, ConstraintSet, GrapeProblem};
use geophase::hilbert::{displacement, embed, qubit_ops, qubit_state, LogicalLabel, Operator};
use geophase::linalg::unitarity_defect;
use geophase::tomography::BayesMatrix;
use geophase::{CMatrix, C64};
use proptest::prelude::*;

fn hermitian3(v: &[f64]) -> Operator {
    let mut m = CMatrix::zeros(3, 3);
    let mut k = 0;
    for i in 0..3 {
        for j in i..3 {
            let z = if i == j { C64::new(v[k], 0.0) } else { C64::new(v[k], v[k + 1]) };
            k += if i == j { 1 } else { 2 };
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    Operator::hermitian(vec![3], m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Embedding multiplies every eigenvalue's multiplicity by the spectator dimension, so
    /// `Tr[E^k] = 4 Tr[op^k]` on `2 ⊗ 3 ⊗ 2`.
    #[test]
    fn embed_preserves_spectrum(v in proptest::collection::vec(-2.0f64..2.0, 9)) {
        let op = hermitian3(&v);
        let e = embed(&op, &[2, 3, 2], 1).unwrap();
        let mut p = CMatrix::identity(3, 3);
        let mut q = CMatrix::identity(12, 12);
        for _ in 0..4 {
            p = &p * op.matrix();
            q = &q * e.matrix();
            let (tp, tq) = (p.trace(), q.trace());
            prop_assert!((tq - tp * 4.0).norm() <= 1e-9 * tq.norm().max(1.0));
        }
    }

    #[test]
    fn displacement_is_unitary(re in -2.0f64..2.0, im in -2.0f64..2.0, dim in 3usize..30) {
        let d = displacement(dim, C64::new(re, im)).unwrap();
        prop_assert!(unitarity_defect(d.matrix()) < 1e-10);
    }

    #[test]
    fn pulse_csv_round_trip(amps in proptest::collection::vec(-1e8f64..1e8, 1..40), dt_ns in 0.1f64..10.0) {
        let n = amps.len();
        let q: Vec<f64> = amps.iter().rev().copied().collect();
        let p = PulseSet::new(dt_ns * 1e-9, vec!["QC_I".into(), "QC_Q".into()], vec![amps, q]).unwrap();
        let back = PulseSet::from_csv_str(&p.to_csv_string().unwrap()).unwrap();
        prop_assert_eq!(back.n_steps(), n);
        prop_assert_eq!(back.labels(), p.labels());
        // the time column carries 1e-6 ns resolution
        prop_assert!((back.dt() - p.dt()).abs() <= 0.5e-15 + 1e-12 * p.dt());
        for (a, b) in back.amplitudes().iter().flatten().zip(p.amplitudes().iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    /// A common phase on every target leaves the cost unchanged.
    #[test]
    fn cost_ignores_global_target_phase(phi in 0.0f64..6.28, a in proptest::collection::vec(-5e7f64..5e7, 8)) {
        let (sx, sy, _) = qubit_ops();
        let sys = ControlledSystem::dense(&Operator::zeros(vec![2]), &[sx, sy], vec!["q_I".into(), "q_Q".into()]).unwrap();
        let pairs = |phase: f64| {
            let f = C64::from_polar(1.0, phase);
            let pairs = [(LogicalLabel::G, LogicalLabel::E), (LogicalLabel::E, LogicalLabel::G), (LogicalLabel::Plus, LogicalLabel::Plus)]
                .into_iter()
                .enumerate()
                .map(|(k, (i, t))| ConstraintPair {
                    initial: qubit_state(i),
                    target: qubit_state(t).scaled(f),
                    weight: 1.0 + k as f64,
                    label: format!("{k}"),
                })
                .collect();
            ConstraintSet { kind: ConstraintKind::Custom, pairs }
        };
        let pulses = PulseSet::new(2e-9, vec!["q_I".into(), "q_Q".into()], vec![a[..4].to_vec(), a[4..].to_vec()]).unwrap();
        let c0 = GrapeProblem::new(sys.clone(), &pairs(0.0)).unwrap().evaluate(&pulses, Default::default()).unwrap();
        let c1 = GrapeProblem::new(sys, &pairs(phi)).unwrap().evaluate(&pulses, Default::default()).unwrap();
        prop_assert!((c0.cost - c1.cost).abs() < 1e-12);
        let scale = c0.gradient.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()));
        for (g0, g1) in c0.gradient.iter().flatten().zip(c1.gradient.iter().flatten()) {
            prop_assert!((g0 - g1).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn bayes_csv_round_trip(p in 0.0f64..0.2) {
        let b = BayesMatrix::symmetric(p).unwrap();
        let back = BayesMatrix::from_csv_str(&b.to_csv_string()).unwrap();
        prop_assert!((back.matrix() - b.matrix()).amax() < 1e-12);
    }
}

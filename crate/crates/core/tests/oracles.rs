//! Library results checked against independent, test-side constructions.

use geophase::dynamics::{ControlledSystem, PulseSet};
use geophase::grape::{cz_constraints, ideal_cz, selective_baseline, GrapeProblem, PulseShape};
use geophase::hamiltonian::{block_decompose, build_static, paper_profile};
use geophase::hilbert::{codewords, displacement, fock_state};
use geophase::pipeline::cz_process_infidelity;
use geophase::tomography::{pauli_labels, process_fidelity, PauliTransferMatrix};
use geophase::{CMatrix, C64};
use nalgebra::DMatrix;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn m2(a: [C64; 4]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &a)
}

/// I, X, Y, Z ⊗ I, X, Y, Z in row-major label order.
fn paulis() -> Vec<CMatrix> {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    let single = [m2([o, z, z, o]), m2([z, o, o, z]), m2([z, -i, i, z]), m2([o, z, z, -o])];
    let mut out = Vec::new();
    for a in &single {
        for b in &single {
            out.push(a.kronecker(b));
        }
    }
    out
}

fn brute_force_ptm(u: &CMatrix) -> DMatrix<f64> {
    let p = paulis();
    DMatrix::from_fn(16, 16, |i, j| (&p[i] * u * &p[j] * u.adjoint()).trace().re / 4.0)
}

#[test]
fn cz_ptm_matches_brute_force() {
    let cz = CMatrix::from_diagonal(&geophase::CVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]));
    let lib = PauliTransferMatrix::from_unitary(&cz).unwrap();
    let oracle = brute_force_ptm(&cz);
    assert!((lib.matrix() - &oracle).amax() < 1e-14);
    // CZ is Clifford: a signed permutation
    for row in oracle.row_iter() {
        let nz: Vec<f64> = row.iter().copied().filter(|v| v.abs() > 1e-12).collect();
        assert_eq!(nz.len(), 1);
        assert!((nz[0].abs() - 1.0).abs() < 1e-14);
    }
    assert_eq!(pauli_labels()[0], "II");
}

#[test]
fn random_unitary_ptm_and_fidelity() {
    // a fixed non-Clifford unitary: exp(-i H) for a Hermitian H with irrational entries
    let mut h = CMatrix::zeros(4, 4);
    for a in 0..4 {
        for b in 0..4 {
            let v = c(((a * 7 + b * 3) as f64).sin(), if a == b { 0.0 } else { ((a + 2 * b) as f64).cos() });
            h[(a, b)] += v;
            h[(b, a)] += v.conj();
        }
    }
    let u = geophase::linalg::HermitianEigen::new(&h).propagator(0.7);
    let lib = PauliTransferMatrix::from_unitary(&u).unwrap();
    assert!((lib.matrix() - brute_force_ptm(&u)).amax() < 1e-13);
    // F = (|Tr U|² + d)/(d² + d) for unitary channels against the identity
    let f = process_fidelity(&lib, &PauliTransferMatrix::identity()).unwrap();
    let expected = (u.trace().norm_sqr() + 4.0) / 20.0;
    assert!((f - expected).abs() < 1e-12, "{f} vs {expected}");
}

#[test]
fn static_diagonal_matches_closed_form() {
    let sys = paper_profile().subsystem(&["S1", "QC", "S2"], &["QC"]).unwrap().with_cavity_dim(5).unwrap();
    let h = build_static(&sys);
    let k1 = sys.mode("S1").unwrap().self_kerr;
    let k2 = sys.mode("S2").unwrap().self_kerr;
    let (x1, x2, x12) = (sys.chi("S1", "QC"), sys.chi("QC", "S2"), sys.chi("S1", "S2"));
    for a in 0..5 {
        for q in 0..2 {
            for b in 0..5 {
                let (a_, q_, b_) = (a as f64, q as f64, b as f64);
                let e = -0.5 * k1 * a_ * (a_ - 1.0) - 0.5 * k2 * b_ * (b_ - 1.0) - x1 * a_ * q_ - x2 * q_ * b_ - x12 * a_ * b_;
                let idx = (a * 2 + q) * 5 + b;
                let got = h.matrix()[(idx, idx)];
                assert!((got.re - e).abs() <= 1e-9 * e.abs().max(1.0) && got.im == 0.0, "({a},{q},{b})");
            }
        }
    }
    assert!(h.matrix().iter().enumerate().all(|(k, v)| k % 51 == 0 || *v == c(0.0, 0.0)));
}

#[test]
fn coherent_state_from_displacement() {
    let beta = c(0.8, -0.5);
    let d = displacement(40, beta).unwrap();
    let psi = d.apply(&fock_state(40, 0).unwrap()).unwrap();
    let mut fact = 1.0;
    for n in 0..15 {
        if n > 0 {
            fact *= n as f64;
        }
        let expected = (-beta.norm_sqr() / 2.0).exp() * beta.powu(n as u32) / fact.sqrt();
        assert!((psi.amplitudes()[n] - expected).norm() < 1e-12, "n = {n}");
    }
}

#[test]
fn codewords_are_binomial() {
    let [z, o] = codewords(8).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for n in 0..8 {
        let ez = if n == 0 || n == 4 { r } else { 0.0 };
        let eo = if n == 2 { 1.0 } else { 0.0 };
        assert!((z.amplitudes()[n] - c(ez, 0.0)).norm() < 1e-15);
        assert!((o.amplitudes()[n] - c(eo, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn idle_is_far_from_cz_and_propagators_stay_unitary() {
    let sys = paper_profile().subsystem(&["S1", "QC", "S2"], &["QC"]).unwrap().with_cavity_dim(5).unwrap();
    let blocks = block_decompose(&sys).unwrap();
    let zero: PulseSet = PulseSet::zeros(2e-9, vec!["QC_I".into(), "QC_Q".into()], 50).unwrap();
    let inf = cz_process_infidelity(&sys, &zero, &Default::default()).unwrap();
    // 100 ns idle is close to the identity; F(I, CZ) = (4 + 4)/20
    assert!((inf - 0.6).abs() < 0.05, "{inf}");
    let pulse = selective_baseline(&blocks, (2, 2), PulseShape::Gaussian, 2e-6, 2e-9).unwrap();
    let problem = GrapeProblem::on_blocks(&blocks, &cz_constraints(&sys.dims()).unwrap()).unwrap();
    assert!(problem.fidelities(&pulse).unwrap().iter().all(|f| (0.0..=1.0 + 1e-12).contains(f)));
    let full = ControlledSystem::from_system(&sys).unwrap().propagator(&pulse).unwrap();
    assert!(geophase::linalg::unitarity_defect(&full) < 1e-10);
    assert_eq!(ideal_cz(&sys.dims()).unwrap().dim(), 50);
}

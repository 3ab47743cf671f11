use nalgebra::DMatrix;

use super::fixtures::{h2_minimal, noninteracting_pair, random_integrals};
use super::*;
use crate::care::{build_hamiltonian, solve_care_sign};
use crate::gen;
use crate::linalg::{c, real_part};

fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol
}

#[test]
fn basis_counts() {
    for no in 1..=4 {
        for nv in 1..=4 {
            for m in 1..=3 {
                let b = excitation_basis(no, nv, m);
                assert_eq!(b.len(), basis_size(no, nv, m));
                let direct: usize = (1..=m).map(|a| binomial(no, a) * binomial(nv, a)).sum();
                assert_eq!(b.len(), direct);
                assert!(b.strings.windows(2).all(|w| (w[0].rank(), &w[0]) < (w[1].rank(), &w[1])));
                assert!(b.strings.iter().all(|e| e.holes.windows(2).all(|h| h[0] < h[1]) && e.particles.windows(2).all(|p| p[0] < p[1])));
            }
        }
    }
    assert_eq!(binomial(6, 3), 20);
}

/// The single-pair formula fed by raw element values, as a scalar check
/// of the assembly.
#[test]
fn m1_formula_on_one_pair() {
    let mut ints = IntegralSet::new(1, 1, alloc::vec![-0.5, 0.5]).unwrap();
    // ⟨ib‖aj⟩ with i = j = 0, a = b = 1 is ⟨01‖10⟩.
    ints.set_two_body(0, 1, 1, 0, 0.1).unwrap();
    let m = build_rpa_m1(&ints);
    assert!((m.a[(0, 0)] - 1.1).abs() < 1e-15);
    // ⟨ab‖ij⟩ = ⟨11‖00⟩ vanishes for a single spin-orbital pair.
    assert_eq!(m.b[(0, 0)], 0.0);
}

#[test]
fn m1_without_interaction() {
    let m = build_rpa_m1(&noninteracting_pair());
    assert_eq!(m.a[(0, 0)], 1.0);
    assert_eq!(m.b[(0, 0)], 0.0);
    let mut r = gen::rng(1);
    let mut ints = random_integrals(&mut r, 2, 3, 0.1);
    ints.two_body.clear();
    let m = build_rpa_m1(&ints);
    assert_eq!(m.b.amax(), 0.0);
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                assert_eq!(m.a[(i, j)], 0.0);
            }
        }
    }
}

#[test]
fn brute_force_matches_formula_at_m1() {
    let mut r = gen::rng(7);
    for (no, nv) in [(2, 2), (1, 3), (3, 2)] {
        let ints = random_integrals(&mut r, no, nv, 0.1);
        let f = build_rpa_m1(&ints);
        let bf = build_mrpa_matrices(&ints, 1).unwrap();
        assert!(close(&f.a, &bf.a, 1e-13), "{}\n{}", f.a, bf.a);
        assert!(close(&f.b, &bf.b, 1e-13), "{}\n{}", f.b, bf.b);
        assert!(bf.metric_defect.unwrap() == 0.0);
    }
    let h2 = h2_minimal();
    let f = build_rpa_m1(&h2);
    assert!(close(&f.a, &build_mrpa_matrices(&h2, 1).unwrap().a, 1e-13));
}

#[test]
fn structural_zeros() {
    let mut r = gen::rng(12);
    for (no, nv, m) in [(2, 2, 2), (3, 3, 2), (3, 3, 3), (2, 3, 2)] {
        let ints = random_integrals(&mut r, no, nv, 0.2);
        let mats = build_mrpa_matrices(&ints, m).unwrap();
        let s = mats.structure();
        assert_eq!(s.max_b_outside, 0.0);
        assert!(s.max_a_far <= 1e-12);
        assert!(s.metric_defect.unwrap() <= 1e-12);
        assert!(s.b_asymmetry <= 1e-14);
        for al in 1..=m {
            for be in 1..=m {
                if al.abs_diff(be) <= 1 {
                    let blk = mats.a_block(al, be);
                    assert!(close(&blk, &mats.a_block(be, al).transpose(), 1e-13));
                }
            }
        }
    }
}

/// For `|α − β| = 2` the literal commutator is not symmetric: the lower
/// block also picks up `−⟨HF|K_μ K†_ν H|HF⟩` from the doubles in `H|HF⟩`.
#[test]
fn rank_two_apart_blocks_are_asymmetric() {
    let mut r = gen::rng(13);
    let ints = random_integrals(&mut r, 3, 3, 0.2);
    let mats = build_mrpa_matrices(&ints, 3).unwrap();
    let upper = mats.a_block(1, 3);
    let lower = mats.a_block(3, 1);
    assert!(upper.amax() > 1e-3);
    assert!((&lower - upper.transpose()).amax() > 1e-3);
}

#[test]
fn basis_cap() {
    let mut r = gen::rng(2);
    let ints = random_integrals(&mut r, 3, 3, 0.1);
    assert!(matches!(build_mrpa_matrices_capped(&ints, 3, 18), Err(Error::OverCap { value: 19, .. })));
    assert!(build_mrpa_matrices(&ints, 0).is_err());
}

#[test]
fn diagonal_integrals_touch_only_the_diagonal() {
    let mut r = gen::rng(4);
    let ints = random_integrals(&mut r, 2, 2, 0.1);
    let mut bumped = ints.clone();
    for p in 0..4 {
        for q in p + 1..4 {
            let key = canonical(p, q, p, q).unwrap().0;
            *bumped.two_body.entry(key).or_insert(0.0) += 0.05 * (p + 2 * q) as f64;
        }
    }
    for m in 1..=2 {
        let a0 = build_mrpa_matrices(&ints, m).unwrap();
        let a1 = build_mrpa_matrices(&bumped, m).unwrap();
        let mut d = &a1.a - &a0.a;
        d.fill_diagonal(0.0);
        assert!(d.amax() <= 1e-14, "m = {m}: {}", d.amax());
        assert!(close(&a1.b, &a0.b, 1e-14));
    }
}

#[test]
fn care_mapping() {
    let p = rpa_to_care(&RpaMatrices::one_pair(1.1, 0.2)).unwrap();
    assert_eq!(p.p[(0, 0)], c(-1.1, 0.0));
    assert_eq!(p.q[(0, 0)], c(0.2, 0.0));
    assert_eq!(p.r[(0, 0)], c(-0.2, 0.0));

    let mats = build_rpa_m1(&h2_minimal());
    let h = build_hamiltonian(&rpa_to_care(&mats).unwrap()).h;
    assert!((h + rpa_matrix(&mats)).iter().all(|z| z.norm() < 1e-15));
}

#[test]
fn decoupled_limit() {
    let mats = RpaMatrices { b: DMatrix::zeros(2, 2), ..build_rpa_m1(&random_integrals(&mut gen::rng(9), 1, 2, 0.05)) };
    let x = solve_care_sign(&rpa_to_care(&mats).unwrap()).unwrap().x;
    assert!(x.iter().all(|z| z.norm() < 1e-12));
    assert!(plasmon_energy(&mats).unwrap().abs() < 1e-12);
}

#[test]
fn one_pair_closed_form() {
    let (a, b) = (1.1, 0.2);
    let mats = RpaMatrices::one_pair(a, b);
    let want = 0.25 * (libm::sqrt(a * a - b * b) - a);
    assert!((plasmon_energy(&mats).unwrap() - want).abs() < 1e-12);
    let t = one_pair_amplitude(a, b);
    assert!((t - (-a + libm::sqrt(a * a - b * b)) / b).abs() < 1e-15);
    assert!((correlation_energy(&mats.b, &DMatrix::from_element(1, 1, t)).unwrap() - want).abs() < 1e-15);
    let x = real_part(&solve_care_sign(&rpa_to_care(&mats).unwrap()).unwrap().x);
    assert!((x[(0, 0)] - t).abs() < 1e-12);
    assert!(riccati_residual_mrpa(&mats.a, &mats.b, &x) <= 1e-10);
}

#[test]
fn zero_amplitude_residual() {
    let mats = RpaMatrices::one_pair(1.0, 0.3);
    let r = riccati_residual_mrpa(&mats.a, &mats.b, &DMatrix::zeros(1, 1));
    assert!((r - 0.3).abs() < 1e-15);
    assert!(correlation_energy(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)).unwrap() == 0.0);
    assert!(correlation_energy(&DMatrix::zeros(2, 2), &DMatrix::identity(3, 3)).is_err());
}

#[test]
fn energy_routes_agree() {
    let mut r = gen::rng(31);
    let mut cases = alloc::vec![h2_minimal()];
    for (no, nv) in [(1, 1), (2, 2), (2, 3), (3, 3)] {
        cases.push(random_integrals(&mut r, no, nv, 0.05));
    }
    for ints in cases {
        let mats = build_rpa_m1(&ints);
        let ep = plasmon_energy(&mats).unwrap();
        let t = real_part(&solve_care_sign(&rpa_to_care(&mats).unwrap()).unwrap().x);
        let ec = correlation_energy(&mats.b, &t).unwrap();
        assert!((ep - ec).abs() <= 1e-8, "{ep} vs {ec}");
        assert!(riccati_residual_mrpa(&mats.a, &mats.b, &t) <= 1e-10);
        let te = plasmon_amplitudes(&mats).unwrap();
        assert!(riccati_residual_mrpa(&mats.a, &mats.b, &te) <= 1e-8);
        assert!(close(&te, &t, 1e-8));
    }
}

#[test]
fn h2_is_stable_with_negative_correlation() {
    let mats = build_rpa_m1(&h2_minimal());
    let e = plasmon_energy(&mats).unwrap();
    assert!(e < 0.0 && e > -0.1, "{e}");
    assert!(excitation_energies(&mats).unwrap().iter().all(|w| *w > 0.0));
}

#[test]
fn instability_is_reported() {
    let mats = RpaMatrices::one_pair(0.1, 0.5);
    assert!(matches!(plasmon_energy(&mats), Err(Error::RpaInstability { .. })));
}

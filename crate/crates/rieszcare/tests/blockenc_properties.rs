use proptest::prelude::*;
use rieszcare::blockenc::pipeline::alpha_pi_bound;
use rieszcare::blockenc::*;
use rieszcare::care::{build_hamiltonian, require_gap, riesz_projector_exact, solve_care_sign};
use rieszcare::contour::*;
use rieszcare::gen;
use rieszcare::linalg::{c, ceil_log2, norm2, sigma_min, CMat, C64};

fn with_singular_values(seed: u64, s: &[f64]) -> CMat {
    let mut r = gen::rng(seed);
    let n = s.len();
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, s.iter().map(|&x| c(x, 0.0))));
    gen::unitary(&mut r, n) * d * gen::unitary(&mut r, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lcu_is_exact_and_unitary(seed in any::<u64>(), k in 1usize..=5, n in 1usize..=3) {
        let mut r = gen::rng(seed);
        let terms: Vec<(C64, CMat)> = (0..k).map(|_| (c(gen::gaussian(&mut r), gen::gaussian(&mut r)), gen::unitary(&mut r, n))).collect();
        let be = lcu_combine(&terms).unwrap();
        let direct = terms.iter().fold(CMat::zeros(n, n), |acc, (z, u)| acc + u * *z);
        prop_assert!(norm2(&(be.block() - direct)) <= 1e-12);
        prop_assert!(be.unitarity_defect() <= 1e-9);
        prop_assert_eq!(be.a_left, ceil_log2(k));
    }

    #[test]
    fn dilation_and_shift_are_sound(seed in any::<u64>(), n in 1usize..=4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let mut r = gen::rng(seed);
        let h = gen::complex_gaussian(&mut r, n, n);
        let be = dilation_encode(&h, 1.5 * norm2(&h)).unwrap();
        prop_assert!(be.unitarity_defect() <= 1e-9);
        prop_assert!(norm2(&(be.block() - &h)) <= be.eps_bound + 1e-12);
        let z = c(re, im);
        let s = shift_encode(&be, z).unwrap();
        let want = CMat::identity(n, n) * z - &h;
        prop_assert!(s.unitarity_defect() <= 1e-9);
        prop_assert!(norm2(&(s.block() - want)) <= s.eps_bound + 1e-12);
    }

    #[test]
    fn inverse_and_product_are_sound(seed in any::<u64>(), kappa in 1.5f64..12.0, n in 1usize..=3) {
        let mut r = gen::rng(seed);
        let s: Vec<f64> = (0..n).map(|_| 1.0 / kappa + (1.0 - 1.0 / kappa) * rand::Rng::gen::<f64>(&mut r)).collect();
        let a = with_singular_values(seed ^ 1, &s);
        let be = dilation_encode(&a, 1.0).unwrap();
        let (inv, poly) = invert_encode(&be, kappa, 1e-6).unwrap();
        let ainv = rieszcare::linalg::inverse(&a).unwrap();
        prop_assert!(inv.unitarity_defect() <= 1e-9);
        prop_assert!((inv.alpha - 8.0 * kappa / 3.0).abs() <= 1e-12 * kappa);
        prop_assert!(norm2(&(inv.block() - &ainv)) <= inv.eps_bound + 1e-10, "{} > {}", norm2(&(inv.block() - &ainv)), inv.eps_bound);
        prop_assert!(poly.degree % 2 == 1);
        let p = product_encode(&be, &inv).unwrap();
        prop_assert!(p.unitarity_defect() <= 1e-9);
        prop_assert!(norm2(&(p.block() - CMat::identity(n, n))) <= p.eps_bound + 1e-10);
    }

    #[test]
    fn degree_is_monotone_in_kappa(k1 in 1.0f64..40.0, dk in 0.0f64..40.0, e in 3i32..=10) {
        let eps = 10f64.powi(-e);
        let p1 = build_inverse_polynomial(k1, eps).unwrap();
        let p2 = build_inverse_polynomial(k1 + dk, eps).unwrap();
        prop_assert!(p1.degree <= p2.degree, "deg({k1}) = {} > deg({}) = {}", p1.degree, k1 + dk, p2.degree);
        prop_assert!(p1.grid_error <= eps && p1.max_abs <= 1.0);
    }

    #[test]
    fn ledger_arithmetic(a_h in 1u32..6, m in 24usize..300) {
        let prob = rieszcare::care::CareProblem::new(CMat::zeros(1, 1), CMat::identity(1, 1), CMat::identity(1, 1)).unwrap();
        let mut be = dilation_encode(&build_hamiltonian(&prob).h, 2.0).unwrap();
        be.meta_ancilla = a_h;
        be.meta_ancilla_right = a_h;
        let config = PipelineConfig { eps_x: 1.0, eps_trap: Some(1e-8), eps_pol_pi: Some(1e-8), eps_pol_plus: Some(1e-6), nodes: Some(m), ..Default::default() };
        let (x, rep) = care_solution_encode(&be, &select_parameters(2.0, 1.0).unwrap(), &config).unwrap();
        let stage = |s: &str| rep.ancilla_ledger.iter().find(|e| e.stage == s).unwrap().left;
        prop_assert_eq!(rep.nodes, m);
        prop_assert_eq!(stage("Pi_a"), a_h + ceil_log2(m) + 2);
        prop_assert_eq!(stage("X"), a_h + ceil_log2(m) + 5);
        prop_assert_eq!(x.meta_ancilla, a_h + ceil_log2(m) + 5);
    }
}

/// Riesz-stage soundness, idempotence, the κ₂ sandwich and the ledger on
/// small gapped instances.
#[test]
fn riesz_stage_on_gapped_instances() {
    for seed in 0..4u64 {
        let n = 1 + (seed as usize % 2);
        let prob = gen::gapped_care(&mut gen::rng(100 + seed), n, 0.25, 1.0);
        let h = build_hamiltonian(&prob).h;
        let delta = require_gap(&build_hamiltonian(&prob)).unwrap().delta;
        let alpha_h = norm2(&h).max(1.0);
        let be_h = dilation_encode(&h, alpha_h).unwrap();
        let contour = select_parameters(alpha_h, delta).unwrap();
        let bounds = resolvent_bounds(&h, &contour, admissible_eta(&contour), default_samples(&contour)).unwrap();
        let m = nodes_for_accuracy(&bounds, 1e-6);
        let rule = quadrature_nodes(&contour, m).unwrap();
        let (pi, rep) = riesz_encode(&be_h, &rule, &bounds, 1e-8).unwrap();
        let exact = riesz_projector_exact(&h).unwrap();
        let pt = pi.block();
        let eb = pi.eps_bound;
        assert!(pi.unitarity_defect() <= 1e-9);
        assert!(norm2(&(&pt - &exact)) <= eb, "seed {seed}: {} > {eb}", norm2(&(&pt - &exact)));
        assert!(norm2(&(&pt * &pt - &pt)) <= 3.0 * eb + eb * eb);
        assert!(pi.alpha <= alpha_pi_bound(&bounds, alpha_h) * (1.0 + 1e-12));
        assert_eq!(pi.meta_ancilla, be_h.meta_ancilla + ceil_log2(m) + 2);
        assert_eq!(rep.nodes, m);

        let xs = solve_care_sign(&prob).unwrap().x;
        let p2 = exact.columns(n, n).into_owned();
        let kappa2 = pipeline::kappa2_from_solution(pi.alpha, norm2(&xs));
        assert!(pi.alpha / sigma_min(&p2) <= kappa2 * (1.0 + 1e-12));
        let (_, enc_p2) = column_blocks(&pi).unwrap();
        assert!(pi.alpha / sigma_min(&enc_p2.block()) <= kappa2 * (1.0 + 1e-6));
    }
}

/// Fits `c` in `degree ≤ c κ ln(1/ε)` over a grid and prints it.
#[test]
fn degree_constant() {
    let mut worst = 0.0f64;
    for kappa in [2.0, 5.0, 10.0, 20.0, 50.0] {
        for e in [1e-3, 1e-6, 1e-9, 1e-12] {
            let p = build_inverse_polynomial(kappa, e).unwrap();
            worst = worst.max(p.degree as f64 / (kappa * libm::log(1.0 / e)));
        }
    }
    println!("fitted degree constant c = {worst:.3}");
    assert!(worst.is_finite() && worst < 10.0);
}

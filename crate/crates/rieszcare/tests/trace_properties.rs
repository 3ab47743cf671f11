use nalgebra::SVD;
use proptest::prelude::*;
use rieszcare::blockenc::{dilation_encode, identity_encode, BlockEncoding};
use rieszcare::gen;
use rieszcare::linalg::{c, norm2, trace, CMat, C64, ONE};
use rieszcare::trace_est::*;

fn pair(seed: u64, n: usize) -> (CMat, CMat) {
    let mut r = gen::rng(seed);
    (gen::complex_gaussian(&mut r, n, n), gen::complex_gaussian(&mut r, n, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trace_identity(seed in any::<u64>(), n in 1usize..=6) {
        let (b, t) = pair(seed, n);
        let p = state_encodings(&b).unwrap();
        let want = trace(&(&b * &t));
        let got = trace_overlap_exact(&t, &p).unwrap() * p.lambda_b;
        prop_assert!((got - want).norm() <= 1e-10 * (1.0 + want.norm()));
        prop_assert!((p.chi.norm() - 1.0).abs() <= 1e-12 && (p.eta.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn lambda_bound(seed in any::<u64>(), n in 1usize..=6, keep in 0.1f64..1.0) {
        let mut r = gen::rng(seed);
        let mut b = gen::complex_gaussian(&mut r, n, n);
        b.iter_mut().for_each(|z| if rand::Rng::gen::<f64>(&mut r) > keep { *z = C64::new(0.0, 0.0) });
        b[(0, 0)] = ONE;
        let p = state_encodings(&b).unwrap();
        prop_assert!(p.lambda_b <= p.lambda_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn hadamard_probability_law(seed in any::<u64>(), n in 1usize..=3, theta in -3.2f64..3.2) {
        let (b, t) = pair(seed, n);
        let alpha = 1.25 * norm2(&t);
        let be = dilation_encode(&t, alpha).unwrap();
        let p = state_encodings(&b).unwrap();
        let p0 = hadamard_p0(&be, &p, theta).unwrap();
        let a = trace_overlap_exact(&t, &p).unwrap() / alpha;
        prop_assert!((0.0..=1.0).contains(&p0));
        prop_assert!((p0 - 0.5 * (1.0 + (C64::from_polar(1.0, theta) * a).re)).abs() <= 1e-12);
    }
}

/// Equality in `Λ_B ≤ r √s ‖B‖_max` for flat rows of equal sparsity, strict
/// inequality otherwise.
#[test]
fn lambda_bound_extremes() {
    let mut flat = CMat::zeros(4, 4);
    for (i, j) in [(0, 0), (0, 2), (2, 1), (2, 3), (3, 0), (3, 3)] {
        flat[(i, j)] = C64::from_polar(0.7, (i + j) as f64);
    }
    let p = state_encodings(&flat).unwrap();
    assert!((p.lambda_b - p.lambda_bound()).abs() <= 1e-14);
    let mut uneven = flat.clone();
    uneven[(0, 2)] = c(0.3, 0.0);
    let p = state_encodings(&uneven).unwrap();
    assert!(p.lambda_b < p.lambda_bound() - 1e-3);
    let mut ragged = flat;
    ragged[(2, 0)] = c(0.7, 0.0);
    let p = state_encodings(&ragged).unwrap();
    assert!(p.lambda_b < p.lambda_bound() - 1e-3);
}

#[test]
fn hadamard_mean_is_unbiased() {
    let (b, t) = pair(77, 3);
    let alpha = 1.1 * norm2(&t);
    let be = dilation_encode(&t, alpha).unwrap();
    let p = state_encodings(&b).unwrap();
    let a = trace_overlap_exact(&t, &p).unwrap() / alpha;
    let shots = 100_000;
    for (theta, want) in [(0.0, a.re), (-core::f64::consts::FRAC_PI_2, a.im)] {
        let mean = hadamard_test(&be, &p, theta, shots, 5).unwrap();
        let se = (1.0 - want * want).max(0.0).sqrt() / (shots as f64).sqrt();
        assert!((mean - want).abs() <= 5.0 * se, "θ = {theta}: {mean} vs {want}, se {se}");
    }
}

/// Encoding of `T + E` with `‖E‖ = eps_t` aligned to maximize `|Tr(BE)|`,
/// reported with error bound `eps_t`.
fn worst_case_encoding(b: &CMat, t: &CMat, eps_t: f64) -> BlockEncoding {
    let svd = SVD::new(b.clone(), true, true);
    let e = svd.v_t.unwrap().adjoint() * svd.u.unwrap().adjoint() * c(eps_t, 0.0);
    let perturbed = t + e;
    let mut be = dilation_encode(&perturbed, 1.2 * norm2(&perturbed)).unwrap();
    be.eps_bound = eps_t;
    be
}

#[test]
fn systematic_budget_at_the_limit() {
    let eps = 0.1;
    let (mut ok, trials) = (0, 40);
    for seed in 0..trials {
        let (b, t) = pair(300 + seed, 2);
        let p = state_encodings(&b).unwrap();
        let eps_t = eps / (2.0 * p.lambda_b);
        let be = worst_case_encoding(&b, &t, eps_t);
        let rep = amplitude_estimate_trace(&be, &p, eps, 0.05, seed).unwrap();
        if (rep.value - trace(&(&b * &t))).norm() <= eps {
            ok += 1;
        }
    }
    assert!(ok * 10 >= trials * 9, "{ok}/{trials} within eps");
}

#[test]
fn real_inputs_give_small_imaginary_part() {
    let mut r = gen::rng(3);
    let g = gen::real_gaussian(&mut r, 3, 3);
    let b = rieszcare::linalg::from_real(&(&g + g.transpose()));
    let t = rieszcare::linalg::from_real(&(g.transpose() * &g)) * c(0.2, 0.0);
    let be = dilation_encode(&t, norm2(&t)).unwrap();
    let rep = amplitude_estimate_trace(&be, &state_encodings(&b).unwrap(), 0.05, 0.05, 9).unwrap();
    assert!(rep.value.im.abs() <= 0.05);
    let hp = hadamard_p0(&be, &state_encodings(&b).unwrap(), -core::f64::consts::FRAC_PI_2).unwrap();
    assert!((hp - 0.5).abs() <= 1e-12);
}

#[test]
fn identity_smoke() {
    let be = identity_encode(3);
    let mut b = CMat::zeros(3, 3);
    b[(0, 0)] = ONE;
    let p = state_encodings(&b).unwrap();
    // T = I at α_T = 1: expectation 1.
    assert_eq!(hadamard_test(&be, &p, 0.0, 1000, 1).unwrap(), 1.0);
    assert_eq!(trace_overlap_exact(&CMat::identity(3, 3), &p).unwrap(), ONE);
}

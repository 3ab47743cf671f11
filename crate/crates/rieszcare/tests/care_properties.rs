use proptest::prelude::*;
use rieszcare::care::*;
use rieszcare::gen;
use rieszcare::linalg::{eigenvalues, eye, norm2};

fn instance(seed: u64, n: usize) -> CareProblem {
    gen::gapped_care(&mut gen::rng(seed), n, 0.25, 2.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn j_symmetry(seed in any::<u64>(), n in 1usize..=5) {
        let mut r = gen::rng(seed);
        let prob = CareProblem::new(gen::complex_gaussian(&mut r, n, n), gen::hermitian(&mut r, n), gen::hermitian(&mut r, n)).unwrap();
        let h = build_hamiltonian(&prob);
        prop_assert!(h.j_defect() <= 1e-10 * norm2(&h.h));
    }

    #[test]
    fn eigenvalues_come_in_reflected_pairs(seed in any::<u64>(), n in 1usize..=5) {
        let h = build_hamiltonian(&instance(seed, n)).h;
        let eigs = eigenvalues(&h).unwrap();
        let tol = 1e-8 * norm2(&h).max(1.0);
        for z in &eigs {
            if z.re.abs() > tol {
                prop_assert!(eigs.iter().any(|w| (w + z.conj()).norm() <= tol), "{z} unpaired in {eigs:?}");
            }
        }
    }

    #[test]
    fn sign_is_an_involution_commuting_with_h(seed in any::<u64>(), n in 1usize..=5) {
        let h = build_hamiltonian(&instance(seed, n)).h;
        let tol = DEFAULT_SIGN_TOL;
        let s = sign_newton(&h, tol, DEFAULT_SIGN_MAX_ITER).unwrap();
        prop_assert!(norm2(&(&s * &s - eye(2 * n))) <= 10.0 * tol, "{}", norm2(&(&s * &s - eye(2 * n))));
        prop_assert!(norm2(&(&s * &h - &h * &s)) <= 10.0 * tol * norm2(&h));
    }

    #[test]
    fn projectors(seed in any::<u64>(), n in 1usize..=5) {
        let h = build_hamiltonian(&instance(seed, n)).h;
        let pa = riesz_projector_exact(&h).unwrap();
        let ps = riesz_projector_stable_exact(&h).unwrap();
        let scale = norm2(&pa).max(1.0);
        prop_assert!(norm2(&(&pa * &pa - &pa)) <= 1e-10 * scale * scale);
        prop_assert!((rieszcare::linalg::trace(&pa).re - n as f64).abs() <= 1e-8 * scale);
        prop_assert!(norm2(&(&pa + &ps - eye(2 * n))) <= 1e-10 * scale);
        let s = sign_newton(&h, DEFAULT_SIGN_TOL, DEFAULT_SIGN_MAX_ITER).unwrap();
        prop_assert!(norm2(&(s - (pa * rieszcare::linalg::c(2.0, 0.0) - eye(2 * n)))) <= 1e-8 * scale);
    }

    #[test]
    fn solvers_agree_and_stabilize(seed in any::<u64>(), n in 1usize..=5) {
        let prob = instance(seed, n);
        let a = solve_care_sign(&prob).unwrap();
        let pa = riesz_projector_exact(&build_hamiltonian(&prob).h).unwrap();
        let b = extract_solution_from_projector(&pa, n, Some(&prob), DEFAULT_RANK_RTOL).unwrap();
        let xn = norm2(&a.x).max(1.0);
        prop_assert!(norm2(&(&a.x - &b.x)) <= 1e-8 * xn);
        prop_assert!(a.is_stabilizing());
        let margin = eigenvalues(&prob.closed_loop(&a.x)).unwrap().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(margin < 0.0);
        prop_assert!((margin - a.stability_margin).abs() <= 1e-10 * xn * norm2(&build_hamiltonian(&prob).h));
    }
}

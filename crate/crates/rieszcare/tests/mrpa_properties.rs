use proptest::prelude::*;
use rieszcare::care::solve_care_sign;
use rieszcare::gen;
use rieszcare::linalg::real_part;
use rieszcare::mrpa::fixtures::random_integrals;
use rieszcare::mrpa::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn basis_count(no in 1usize..=6, nv in 1usize..=6, m in 1usize..=4) {
        let b = excitation_basis(no, nv, m);
        let want: usize = (1..=m).map(|a| binomial(no, a) * binomial(nv, a)).sum();
        prop_assert_eq!(b.len(), want);
    }

    #[test]
    fn structure_and_metric(seed in any::<u64>(), no in 1usize..=3, nv in 1usize..=3, m in 1usize..=3) {
        let ints = random_integrals(&mut gen::rng(seed), no, nv, 0.2);
        let mats = build_mrpa_matrices(&ints, m).unwrap();
        let s = mats.structure();
        prop_assert_eq!(s.max_b_outside, 0.0);
        prop_assert!(s.max_a_far <= 1e-12);
        prop_assert!(s.metric_defect.unwrap() <= 1e-12);
    }

    #[test]
    fn energy_consistency(seed in any::<u64>(), no in 1usize..=3, nv in 1usize..=3) {
        let ints = random_integrals(&mut gen::rng(seed), no, nv, 0.05);
        let mats = build_rpa_m1(&ints);
        prop_assume!(excitation_energies(&mats).is_ok());
        let ep = plasmon_energy(&mats).unwrap();
        let t = real_part(&solve_care_sign(&rpa_to_care(&mats).unwrap()).unwrap().x);
        let ec = correlation_energy(&mats.b, &t).unwrap();
        prop_assert!((ep - ec).abs() <= 1e-8, "{} vs {}", ep, ec);
    }

    #[test]
    fn diagonal_two_body_terms_stay_diagonal(seed in any::<u64>(), bump in -0.3f64..0.3) {
        let ints = random_integrals(&mut gen::rng(seed), 2, 2, 0.1);
        let mut bumped = ints.clone();
        for p in 0..4 {
            for q in p + 1..4 {
                let key = canonical(p, q, p, q).unwrap().0;
                *bumped.two_body.entry(key).or_insert(0.0) += bump * (1 + p + q) as f64;
            }
        }
        for m in 1..=2 {
            let mut d = &build_mrpa_matrices(&bumped, m).unwrap().a - &build_mrpa_matrices(&ints, m).unwrap().a;
            d.fill_diagonal(0.0);
            prop_assert!(d.amax() <= 1e-14);
        }
    }

    #[test]
    fn integral_file_round_trip(seed in any::<u64>(), no in 1usize..=3, nv in 1usize..=3) {
        let ints = random_integrals(&mut gen::rng(seed), no, nv, 0.3);
        let back = parse_integrals(&format_integrals(&ints)).unwrap();
        prop_assert_eq!(&back.orbital_energies, &ints.orbital_energies);
        for p in 0..no + nv {
            for q in 0..no + nv {
                for r in 0..no + nv {
                    for s in 0..no + nv {
                        prop_assert_eq!(back.v(p, q, r, s), ints.v(p, q, r, s));
                        prop_assert_eq!(back.v(p, q, r, s), -ints.v(q, p, r, s));
                    }
                }
            }
        }
    }
}

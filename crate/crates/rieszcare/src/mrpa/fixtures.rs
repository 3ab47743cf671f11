//! Integral sets used by tests, the acceptance run and the CLI examples.

use alloc::vec::Vec;

use rand::Rng;

use super::integrals::IntegralSet;
use crate::gen::gaussian;

/// Minimal-basis H₂ near equilibrium (R = 1.4 bohr) as four spin orbitals,
/// `1σ_g α, 1σ_g β, 1σ_u α, 1σ_u β`. One spatial occupied-virtual pair.
pub fn h2_minimal() -> IntegralSet {
    let eps = [-0.5782, 0.6703];
    // Chemists' notation (ij|kl) over spatial orbitals g = 0, u = 1.
    let chem = |i: usize, j: usize, k: usize, l: usize| -> f64 {
        match (i + j + k + l, i == j, k == l) {
            (0, _, _) => 0.6746,
            (4, _, _) => 0.6975,
            (2, true, true) => 0.6636,
            (2, false, false) => 0.1813,
            _ => 0.0,
        }
    };
    let phys = |p: usize, q: usize, r: usize, s: usize| -> f64 {
        if p % 2 != r % 2 || q % 2 != s % 2 {
            return 0.0;
        }
        chem(p / 2, r / 2, q / 2, s / 2)
    };
    let mut set = IntegralSet::new(2, 2, (0..4).map(|p| eps[p / 2]).collect()).expect("4 orbitals");
    for p in 0..4 {
        for q in p + 1..4 {
            for r in 0..4 {
                for s in r + 1..4 {
                    if (p, q) > (r, s) {
                        continue;
                    }
                    let v = phys(p, q, r, s) - phys(p, q, s, r);
                    if v != 0.0 {
                        set.set_two_body(p, q, r, s, v).expect("consistent by construction");
                    }
                }
            }
        }
    }
    set
}

/// One occupied and one virtual orbital with no interaction: `B = 0`.
pub fn noninteracting_pair() -> IntegralSet {
    IntegralSet::new(1, 1, alloc::vec![-0.5, 0.5]).expect("2 orbitals")
}

/// Random antisymmetric integrals with occupied energies in `[−1.5, −0.5]`,
/// virtual energies in `[0.5, 1.5]` and two-body elements of size `scale`.
pub fn random_integrals(rng: &mut impl Rng, n_occ: usize, n_virt: usize, scale: f64) -> IntegralSet {
    let n = n_occ + n_virt;
    let mut eps: Vec<f64> = (0..n_occ).map(|_| rng.gen_range(-1.5..-0.5)).collect();
    eps.sort_by(f64::total_cmp);
    let mut virt: Vec<f64> = (0..n_virt).map(|_| rng.gen_range(0.5..1.5)).collect();
    virt.sort_by(f64::total_cmp);
    eps.extend(virt);
    let mut set = IntegralSet::with_cap(n_occ, n_virt, eps, n.max(super::MAX_ORBITALS)).expect("sizes checked by caller");
    for p in 0..n {
        for q in p + 1..n {
            for r in 0..n {
                for s in r + 1..n {
                    if (p, q) <= (r, s) {
                        set.set_two_body(p, q, r, s, scale * gaussian(rng)).expect("canonical keys");
                    }
                }
            }
        }
    }
    set
}

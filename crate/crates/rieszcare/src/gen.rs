//! Seeded instance generators shared by tests, studies and the CLI.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::care::{build_hamiltonian, spectral_split, CareProblem};
use crate::linalg::{c, norm2, CMat, C64};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for trial `i` of a run seeded with `seed`.
pub fn split_seed(seed: u64, i: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i.wrapping_add(1));
    r.gen()
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_gaussian(rng: &mut impl Rng, r: usize, cols: usize) -> CMat {
    CMat::from_fn(r, cols, |_, _| c(gaussian(rng), gaussian(rng)) * core::f64::consts::FRAC_1_SQRT_2)
}

pub fn real_gaussian(rng: &mut impl Rng, r: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, cols, |_, _| gaussian(rng))
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    let g = complex_gaussian(rng, n, n);
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// Haar-like unitary from the QR factor of a complex Gaussian matrix.
pub fn unitary(rng: &mut impl Rng, n: usize) -> CMat {
    let g = complex_gaussian(rng, n, n);
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// A CARE with `Q ≻ 0` and `R ≻ 0`, so that a stabilizing
/// solution exists; resampled until the gap is at least `min_gap`.
/// The Hamiltonian norm is kept near `scale`.
pub fn gapped_care(rng: &mut impl Rng, n: usize, min_gap: f64, scale: f64) -> CareProblem {
    loop {
        let p = complex_gaussian(rng, n, n) * c(scale / libm::sqrt(n as f64), 0.0);
        let g = complex_gaussian(rng, n, n);
        let f = complex_gaussian(rng, n, n);
        let w = scale / libm::sqrt(2.0 * n as f64);
        let q = (&g * g.adjoint() + CMat::identity(n, n) * c(0.5 * n as f64, 0.0)) * c(w * w, 0.0);
        let r = (&f * f.adjoint() + CMat::identity(n, n) * c(0.5 * n as f64, 0.0)) * c(w * w, 0.0);
        let prob = CareProblem::new(p, q, r).expect("generator builds consistent dimensions");
        let h = build_hamiltonian(&prob);
        let tol = 1e-10 * norm2(&h.h);
        let split = match spectral_split(&h, tol) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if !split.has_imaginary_eig && split.delta >= min_gap {
            return prob;
        }
    }
}

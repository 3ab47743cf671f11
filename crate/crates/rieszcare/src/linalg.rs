//! Dense complex helpers on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::linalg::{Schur, LU, SVD};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(a: &DMatrix<f64>) -> CMat {
    a.map(|x| C64::new(x, 0.0))
}

pub fn real_part(a: &CMat) -> DMatrix<f64> {
    a.map(|x| x.re)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let s = SVD::new(a.clone(), false, false).singular_values;
    let mut v: Vec<f64> = s.iter().copied().collect();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap_or(core::cmp::Ordering::Equal));
    v
}

/// Largest singular value.
pub fn norm2(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Smallest singular value (over min(rows, cols) values).
pub fn sigma_min(a: &CMat) -> f64 {
    singular_values(a).last().copied().unwrap_or(0.0)
}

pub fn fro(a: &CMat) -> f64 {
    libm::sqrt(a.iter().map(|x| x.norm_sqr()).sum::<f64>())
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// ‖U†U − I‖₂.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let n = u.ncols();
    norm2(&(u.adjoint() * u - eye(n)))
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    norm2(&(a - a.adjoint()))
}

/// Solve `a x = b` by LU with partial pivoting; fails when the pivot ratio
/// drops below `rcond_min`.
pub fn lu_solve(a: &CMat, b: &CMat, rcond_min: f64) -> Result<CMat> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Dimension(alloc::format!(
            "lu_solve: {}x{} vs {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let lu = LU::new(a.clone());
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows() {
        let d = u[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if !(hi > 0.0) || lo / hi < rcond_min {
        return Err(Error::Singular("lu_solve"));
    }
    lu.solve(b).ok_or(Error::Singular("lu_solve"))
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    lu_solve(a, &eye(a.nrows()), 1e-15)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LstsqInfo {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub rank: usize,
}

impl LstsqInfo {
    pub fn condition(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }
}

/// Least-squares solution of the overdetermined system `a x = b` through
/// the SVD, with rank cutoff `rtol · σ_max`. A rank below `a.ncols()` is an
/// error rather than a minimum-norm answer.
pub fn lstsq(a: &CMat, b: &CMat, rtol: f64) -> Result<(CMat, LstsqInfo)> {
    let (m, n) = a.shape();
    if b.nrows() != m {
        return Err(Error::Dimension(alloc::format!("lstsq: a has {m} rows, b has {}", b.nrows())));
    }
    if m < n {
        return Err(Error::Dimension(alloc::format!("lstsq: underdetermined {m}x{n}")));
    }
    let svd = SVD::new(a.clone(), true, true);
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let smin = s.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = rtol * smax;
    let rank = s.iter().filter(|&&x| x > threshold).count();
    if rank < n || !(smax > 0.0) {
        return Err(Error::RankDeficient { sigma_min: if smin.is_finite() { smin } else { 0.0 }, threshold });
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v requested");
    let mut ub = u.adjoint() * b;
    for i in 0..ub.nrows() {
        let inv = 1.0 / s[i];
        for j in 0..ub.ncols() {
            ub[(i, j)] *= inv;
        }
    }
    let x = vt.adjoint() * ub;
    Ok((x, LstsqInfo { sigma_max: smax, sigma_min: smin, rank }))
}

/// Pseudoinverse of a full-column-rank matrix.
pub fn pinv(a: &CMat, rtol: f64) -> Result<CMat> {
    lstsq(a, &eye(a.nrows()), rtol).map(|(x, _)| x)
}

/// Complex Schur form `a = q t q†` with `t` upper triangular.
pub fn schur(a: &CMat) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((CMat::zeros(0, 0), CMat::zeros(0, 0)));
    }
    // deflation test is relative to neighbouring diagonal entries
    let s = Schur::try_new(a.clone(), f64::EPSILON, 10_000 * n).ok_or(Error::SchurFailed)?;
    let (q, mut t) = s.unpack();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((q, t))
}

pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let (_, t) = schur(a)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Swap adjacent diagonal entries `k`, `k+1` of an upper-triangular `t`,
/// updating `q` so that `q t q†` is unchanged.
fn swap_adjacent(q: &mut CMat, t: &mut CMat, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let d = t[(k + 1, k + 1)];
    let v1 = b;
    let v2 = d - a;
    let r = libm::sqrt(v1.norm_sqr() + v2.norm_sqr());
    if r == 0.0 {
        return;
    }
    let (g1, g2) = (v1 / r, v2 / r);
    // G = [[g1, -conj(g2)], [g2, conj(g1)]]
    for j in 0..n {
        let x = t[(k, j)];
        let y = t[(k + 1, j)];
        t[(k, j)] = g1.conj() * x + g2.conj() * y;
        t[(k + 1, j)] = -g2 * x + g1 * y;
    }
    for i in 0..n {
        let x = t[(i, k)];
        let y = t[(i, k + 1)];
        t[(i, k)] = x * g1 + y * g2;
        t[(i, k + 1)] = -x * g2.conj() + y * g1.conj();
    }
    for i in 0..q.nrows() {
        let x = q[(i, k)];
        let y = q[(i, k + 1)];
        q[(i, k)] = x * g1 + y * g2;
        q[(i, k + 1)] = -x * g2.conj() + y * g1.conj();
    }
    t[(k + 1, k)] = ZERO;
}

/// Schur form reordered so that eigenvalues satisfying `select` lead.
/// Returns `(q, t, k)` with `k` the number of selected eigenvalues.
pub fn ordered_schur(a: &CMat, select: impl Fn(C64) -> bool) -> Result<(CMat, CMat, usize)> {
    let (mut q, mut t) = schur(a)?;
    let n = t.nrows();
    let mut k = 0;
    for j in 0..n {
        if select(t[(j, j)]) {
            let mut i = j;
            while i > k {
                swap_adjacent(&mut q, &mut t, i - 1);
                i -= 1;
            }
            k += 1;
        }
    }
    Ok((q, t, k))
}

/// Solve `t11 y − y t22 = c` for upper-triangular `t11`, `t22`.
pub fn sylvester_triangular(t11: &CMat, t22: &CMat, c: &CMat) -> Result<CMat> {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut y = CMat::zeros(k, m);
    for j in 0..m {
        let mut rhs: Vec<C64> = (0..k).map(|i| c[(i, j)]).collect();
        for l in 0..j {
            let f = t22[(l, j)];
            for i in 0..k {
                rhs[i] += y[(i, l)] * f;
            }
        }
        let shift = t22[(j, j)];
        for i in (0..k).rev() {
            let mut s = rhs[i];
            for l in (i + 1)..k {
                s -= t11[(i, l)] * y[(l, j)];
            }
            let d = t11[(i, i)] - shift;
            if d.norm() == 0.0 {
                return Err(Error::Singular("sylvester_triangular"));
            }
            y[(i, j)] = s / d;
        }
    }
    Ok(y)
}

/// Spectral projector onto the invariant subspace of the eigenvalues picked
/// by `select`, along the complementary invariant subspace.
pub fn spectral_projector(a: &CMat, select: impl Fn(C64) -> bool) -> Result<CMat> {
    let n = a.nrows();
    let (q, t, k) = ordered_schur(a, select)?;
    if k == 0 {
        return Ok(CMat::zeros(n, n));
    }
    if k == n {
        return Ok(eye(n));
    }
    let t11 = t.view((0, 0), (k, k)).into_owned();
    let t12 = t.view((0, k), (k, n - k)).into_owned();
    let t22 = t.view((k, k), (n - k, n - k)).into_owned();
    let y = sylvester_triangular(&t11, &t22, &(-t12))?;
    let mut core = CMat::zeros(n, n);
    for i in 0..k {
        core[(i, i)] = ONE;
        for j in 0..(n - k) {
            core[(i, k + j)] = -y[(i, j)];
        }
    }
    Ok(&q * core * q.adjoint())
}

/// Hermitian square root of a positive semidefinite Hermitian matrix, with
/// negative eigenvalues clamped to zero.
pub fn psd_sqrt(a: &CMat) -> CMat {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::linalg::SymmetricEigen::new(h);
    let d = eig.eigenvalues.map(|x| C64::new(libm::sqrt(x.max(0.0)), 0.0));
    &eig.eigenvectors * CMat::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Pairwise (tree) sum in a fixed order.
pub fn tree_sum(mut parts: Vec<CMat>) -> Option<CMat> {
    if parts.is_empty() {
        return None;
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

pub fn ceil_log2(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn ordered_schur_keeps_similarity() {
        let mut rng = gen::rng(3);
        let a = gen::complex_gaussian(&mut rng, 7, 7);
        let (q, t, k) = ordered_schur(&a, |z| z.re > 0.0).unwrap();
        assert!(fro(&(&q * &t * q.adjoint() - &a)) < 1e-11 * fro(&a));
        for i in 0..7 {
            assert_eq!(t[(i, i)].re > 0.0, i < k);
        }
    }

    #[test]
    fn projector_is_idempotent_with_repeated_eigenvalues() {
        let h = CMat::from_row_slice(4, 4, &[
            ZERO, ZERO, -ONE, ZERO, ZERO, ZERO, ZERO, -ONE, -ONE, ZERO, ZERO, ZERO, ZERO, -ONE, ZERO, ZERO,
        ]);
        let p = spectral_projector(&h, |z| z.re > 0.0).unwrap();
        assert!(fro(&(&p * &p - &p)) < 1e-13);
        assert!((trace(&p).re - 2.0).abs() < 1e-13);
    }

    #[test]
    fn lstsq_recovers_exact_solution() {
        let mut rng = gen::rng(9);
        let a = gen::complex_gaussian(&mut rng, 6, 3);
        let x = gen::complex_gaussian(&mut rng, 3, 2);
        let (xs, info) = lstsq(&a, &(&a * &x), 1e-10).unwrap();
        assert_eq!(info.rank, 3);
        assert!(fro(&(xs - x)) < 1e-12);
    }

    #[test]
    fn lstsq_rejects_zero_block() {
        let a = CMat::zeros(2, 1);
        assert!(matches!(lstsq(&a, &CMat::zeros(2, 1), 1e-10), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn ceil_log2_values() {
        assert_eq!((0..9).map(ceil_log2).collect::<Vec<_>>(), [0, 0, 1, 2, 2, 3, 3, 3, 3]);
    }
}

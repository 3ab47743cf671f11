//! Odd Chebyshev approximation of `3/(8κx)` on `[1/κ, 1]`, bounded by one
//! on `[−1, 1]`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Points used for the uniform-error and maximum checks.
pub const GRID_POINTS: usize = 10_000;
/// Largest interpolation size tried before giving up.
pub const MAX_NODES: usize = 1 << 17;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OddPolynomial {
    /// `cheb_coeffs[j]` multiplies `T_{2j+1}`.
    pub cheb_coeffs: Vec<f64>,
    pub degree: usize,
    pub kappa: f64,
    pub eps_pol: f64,
    /// Measured `max |P|` on the check grid over `[−1, 1]`.
    pub max_abs: f64,
    /// Measured `max |P(x) − 3/(8κx)|` on the check grid over `[1/κ, 1]`.
    pub grid_error: f64,
}

impl OddPolynomial {
    /// Clenshaw recurrence in `y = T₂(x)`, using `T_{2j+3} = 2y T_{2j+1} − T_{2j−1}`.
    pub fn eval(&self, x: f64) -> f64 {
        odd_clenshaw(&self.cheb_coeffs, x)
    }

    /// Identity polynomial `P(x) = x`.
    pub fn monomial() -> Self {
        OddPolynomial { cheb_coeffs: vec![1.0], degree: 1, kappa: 1.0, eps_pol: 0.0, max_abs: 1.0, grid_error: 0.0 }
    }
}

fn odd_clenshaw(a: &[f64], x: f64) -> f64 {
    let y2 = 2.0 * (2.0 * x * x - 1.0);
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ak in a.iter().rev() {
        let b0 = ak + y2 * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    // S = x·b_0 − x·b_1
    x * (b1 - b2)
}

/// The smoothed kernel `(1 − (1 − x²)^b)/x` times an even erf window that
/// switches on between `0` and `1/κ`, scaled by `3/(8κ)`.
struct Target {
    scale: f64,
    b: f64,
    t: f64,
    k: f64,
}

impl Target {
    fn new(kappa: f64, eps: f64) -> Self {
        let b = libm::ceil(kappa * kappa * libm::log(kappa / eps).max(1.0));
        let l = libm::log(1.0 / eps).max(1.0);
        let t = 0.5 / kappa;
        let k = 2.0 * kappa * libm::sqrt(l + 2.0);
        Target { scale: 3.0 / (8.0 * kappa), b, t, k }
    }

    fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        let kern = if ax < 1e-300 {
            0.0
        } else {
            // (1 − (1 − x²)^b)/x, via expm1/log1p for accuracy near 0
            let p = -libm::expm1(self.b * libm::log1p(-x * x));
            p / x
        };
        let w = 1.0 + 0.5 * (libm::erf(self.k * (x - self.t)) - libm::erf(self.k * (x + self.t)));
        self.scale * kern * w
    }
}

/// Odd Chebyshev coefficients (`T_{2j+1}`, `j < nodes/2`) of the
/// interpolant of an odd `f` at `nodes` first-kind points. Mirrored nodes
/// contribute equally, so only the positive half is summed.
fn odd_interpolant(f: impl Fn(f64) -> f64, nodes: usize) -> Vec<f64> {
    let n = nodes;
    let half = n / 2;
    let fx: Vec<f64> = (0..half).map(|j| f(libm::cos(PI * (j as f64 + 0.5) / n as f64))).collect();
    let table: Vec<f64> = (0..4 * n).map(|i| libm::cos(PI * i as f64 / (2 * n) as f64)).collect();
    let mut out = Vec::with_capacity(half);
    for jj in 0..half {
        let k = 2 * jj + 1;
        let mut s = 0.0;
        for (j, v) in fx.iter().enumerate() {
            s += v * table[(k * (2 * j + 1)) % (4 * n)];
        }
        out.push(4.0 * s / n as f64);
    }
    out
}

fn grid_checks(coeffs: &[f64], kappa: f64) -> (f64, f64) {
    let lo = 1.0 / kappa;
    let mut err: f64 = 0.0;
    let mut mx: f64 = 0.0;
    for i in 0..GRID_POINTS {
        let x = if GRID_POINTS > 1 { lo + (1.0 - lo) * i as f64 / (GRID_POINTS - 1) as f64 } else { 1.0 };
        let v = odd_clenshaw(coeffs, x);
        err = err.max((v - 3.0 / (8.0 * kappa * x)).abs());
        let u = i as f64 / (GRID_POINTS - 1) as f64;
        mx = mx.max(odd_clenshaw(coeffs, u).abs()).max(v.abs());
    }
    (err, mx)
}

/// Truncation index: first `j` whose coefficient drops below
/// `eps/(4·(2j+1))`, provided the discarded tail also sums below `eps/4`.
fn truncation(coeffs: &[f64], eps: f64) -> usize {
    let mut tail = vec![0.0; coeffs.len() + 1];
    for j in (0..coeffs.len()).rev() {
        tail[j] = tail[j + 1] + coeffs[j].abs();
    }
    for j in 0..coeffs.len() {
        if coeffs[j].abs() < eps / (4.0 * (2 * j + 1) as f64) && tail[j] <= eps / 4.0 {
            return j.max(1);
        }
    }
    coeffs.len()
}

/// Odd polynomial with `|P| ≤ 1` on `[−1, 1]` and `|P(x) − 3/(8κx)| ≤ ε`
/// on `[1/κ, 1]`, verified on a grid.
pub fn build_inverse_polynomial(kappa: f64, eps_pol: f64) -> Result<OddPolynomial> {
    if !(kappa >= 1.0) || !(eps_pol > 0.0 && eps_pol < 0.5) {
        return Err(Error::InvalidArgument(alloc::format!("need kappa >= 1 and 0 < eps_pol < 1/2 (got {kappa}, {eps_pol})")));
    }
    // The window and kernel each get a quarter of the budget.
    let target = Target::new(kappa, eps_pol / 4.0);
    let est = libm::ceil(4.0 * kappa * libm::log(8.0 * kappa / eps_pol)) as usize;
    let mut nodes = (2 * est + 16).next_power_of_two();
    let mut last = (f64::INFINITY, 0);
    while nodes <= MAX_NODES {
        let full = odd_interpolant(|x| target.eval(x), nodes);
        let keep = truncation(&full, eps_pol);
        if keep < full.len() {
            let mut coeffs = full[..keep].to_vec();
            let (mut err, mut mx) = grid_checks(&coeffs, kappa);
            if mx > 1.0 {
                for c in coeffs.iter_mut() {
                    *c /= mx;
                }
                let chk = grid_checks(&coeffs, kappa);
                err = chk.0;
                mx = chk.1;
            }
            if err <= eps_pol && mx <= 1.0 {
                return Ok(OddPolynomial { degree: 2 * keep - 1, cheb_coeffs: coeffs, kappa, eps_pol, max_abs: mx, grid_error: err });
            }
            last = (err, 2 * keep - 1);
        }
        nodes *= 2;
    }
    Err(Error::PolynomialTolerance { achieved: last.0, target: eps_pol, degree: last.1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clenshaw_matches_cosines() {
        let a = [0.3, -0.2, 0.1, 0.05];
        for i in 0..21 {
            let x = -1.0 + 0.1 * i as f64;
            let th = libm::acos(x);
            let direct: f64 = a.iter().enumerate().map(|(j, c)| c * libm::cos((2 * j + 1) as f64 * th)).sum();
            assert!((odd_clenshaw(&a, x) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn kappa_one() {
        let p = build_inverse_polynomial(1.0, 0.1).unwrap();
        assert!(p.grid_error <= 0.1 && p.max_abs <= 1.0);
        assert!((p.eval(1.0) - 0.375).abs() <= 0.1);
    }

    #[test]
    fn kappa_ten() {
        let p = build_inverse_polynomial(10.0, 1e-3).unwrap();
        assert!(p.grid_error <= 1e-3 && p.max_abs <= 1.0);
        assert_eq!(p.degree % 2, 1);
    }

    #[test]
    fn parity_is_exact() {
        let p = build_inverse_polynomial(4.0, 1e-4).unwrap();
        for i in 0..100 {
            let x = 0.01 * i as f64;
            assert_eq!(p.eval(-x), -p.eval(x));
        }
    }

    #[test]
    fn tight_tolerance_keeps_bound() {
        let p = build_inverse_polynomial(8.0, 1e-12).unwrap();
        assert!(p.grid_error <= 1e-12 && p.max_abs <= 1.0, "{} {}", p.grid_error, p.max_abs);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(build_inverse_polynomial(0.5, 0.1).is_err());
        assert!(build_inverse_polynomial(2.0, 0.7).is_err());
    }
}

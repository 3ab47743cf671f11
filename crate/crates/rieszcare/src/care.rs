//! CARE data model, Hamiltonian matrix, classical reference solvers.
//!
//! The equation is `X Q X − X P − P† X − R = 0` with Hermitian `Q`, `R`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, c, eye, fro, hermiticity_defect, norm2, CMat, LstsqInfo, C64};

pub const DEFAULT_HERMITIAN_RTOL: f64 = 1e-12;
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct CareProblem {
    pub n: usize,
    pub p: CMat,
    pub q: CMat,
    pub r: CMat,
}

impl CareProblem {
    pub fn new(p: CMat, q: CMat, r: CMat) -> Result<Self> {
        Self::with_tolerance(p, q, r, DEFAULT_HERMITIAN_RTOL)
    }

    pub fn with_tolerance(p: CMat, q: CMat, r: CMat, rtol: f64) -> Result<Self> {
        let n = p.nrows();
        if n == 0 {
            return Err(Error::Dimension("n must be at least 1".into()));
        }
        for (name, m) in [("P", &p), ("Q", &q), ("R", &r)] {
            if m.shape() != (n, n) {
                return Err(Error::Dimension(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
            }
        }
        for (what, m) in [("Q", &q), ("R", &r)] {
            let defect = fro(&(m - m.adjoint()));
            if defect > rtol * fro(m).max(1.0) {
                return Err(Error::NotHermitian { what, defect });
            }
        }
        Ok(CareProblem { n, p, q, r })
    }

    pub fn from_real(p: &nalgebra::DMatrix<f64>, q: &nalgebra::DMatrix<f64>, r: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::new(linalg::from_real(p), linalg::from_real(q), linalg::from_real(r))
    }

    /// `X Q X − X P − P† X − R`.
    pub fn residual(&self, x: &CMat) -> CMat {
        x * &self.q * x - x * &self.p - self.p.adjoint() * x - &self.r
    }

    /// Closed-loop matrix `P − Q X`.
    pub fn closed_loop(&self, x: &CMat) -> CMat {
        &self.p - &self.q * x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    pub h: CMat,
    pub n: usize,
}

impl HamiltonianMatrix {
    /// ‖J H − (J H)†‖.
    pub fn j_defect(&self) -> f64 {
        let jh = j_matrix(self.n) * &self.h;
        hermiticity_defect(&jh)
    }
}

/// `J = [[0, I], [−I, 0]]`.
pub fn j_matrix(n: usize) -> CMat {
    let mut j = CMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = c(1.0, 0.0);
        j[(n + i, i)] = c(-1.0, 0.0);
    }
    j
}

/// `H = [[P, −Q], [−R, −P†]]`.
pub fn build_hamiltonian(prob: &CareProblem) -> HamiltonianMatrix {
    let n = prob.n;
    let mut h = CMat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&prob.p);
    h.view_mut((0, n), (n, n)).copy_from(&(-&prob.q));
    h.view_mut((n, 0), (n, n)).copy_from(&(-&prob.r));
    h.view_mut((n, n), (n, n)).copy_from(&(-prob.p.adjoint()));
    HamiltonianMatrix { h, n }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub delta: f64,
    pub stable_eigs: Vec<C64>,
    pub antistable_eigs: Vec<C64>,
    pub has_imaginary_eig: bool,
}

/// `1e-10 · ‖H‖`, floored at the smallest positive double so an exactly
/// imaginary eigenvalue of the zero matrix is still flagged.
pub fn default_imag_tol(h: &CMat) -> f64 {
    (1e-10 * norm2(h)).max(f64::MIN_POSITIVE)
}

pub fn spectral_split(h: &HamiltonianMatrix, imag_tol: f64) -> Result<SpectralSplit> {
    let eigs = linalg::eigenvalues(&h.h)?;
    let delta = eigs.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let has_imaginary_eig = eigs.iter().any(|z| z.re.abs() < imag_tol);
    let (mut stable, mut anti) = (Vec::new(), Vec::new());
    for z in eigs {
        if z.re < 0.0 {
            stable.push(z);
        } else {
            anti.push(z);
        }
    }
    Ok(SpectralSplit {
        delta: if delta.is_finite() { delta } else { 0.0 },
        stable_eigs: stable,
        antistable_eigs: anti,
        has_imaginary_eig,
    })
}

/// Split with the default tolerance; an imaginary eigenvalue is an error.
pub fn require_gap(h: &HamiltonianMatrix) -> Result<SpectralSplit> {
    let tol = default_imag_tol(&h.h);
    let split = spectral_split(h, tol)?;
    if split.has_imaginary_eig || split.antistable_eigs.len() != split.stable_eigs.len() {
        return Err(Error::ImaginaryEigenvalue { min_re: split.delta, tol });
    }
    Ok(split)
}

pub const DEFAULT_SIGN_TOL: f64 = 1e-12;
pub const DEFAULT_SIGN_MAX_ITER: usize = 100;

/// Unscaled Newton iteration `S ← (S + S⁻¹)/2` from `S₀ = H`, stopped when
/// `‖S_{k+1} − S_k‖ ≤ tol ‖S_k‖`.
pub fn sign_newton(h: &CMat, tol: f64, max_iter: usize) -> Result<CMat> {
    let mut s = h.clone();
    let mut step = f64::INFINITY;
    for _ in 0..max_iter {
        let inv = linalg::inverse(&s).map_err(|_| Error::Singular("sign iterate"))?;
        let next = (&s + inv) * c(0.5, 0.0);
        step = fro(&(&next - &s));
        let scale = fro(&s);
        s = next;
        if step <= tol * scale {
            return Ok(s);
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, last_step: step })
}

/// `Π_a = (I + sign H)/2` from an ordered Schur form.
pub fn riesz_projector_exact(h: &CMat) -> Result<CMat> {
    let n2 = h.nrows();
    if n2 % 2 != 0 {
        return Err(Error::Dimension(format!("Hamiltonian dimension {n2} is odd")));
    }
    require_gap(&HamiltonianMatrix { h: h.clone(), n: n2 / 2 })?;
    linalg::spectral_projector(h, |z| z.re > 0.0)
}

/// Stable projector `Π_s = I − Π_a`, computed independently.
pub fn riesz_projector_stable_exact(h: &CMat) -> Result<CMat> {
    let n2 = h.nrows();
    require_gap(&HamiltonianMatrix { h: h.clone(), n: n2 / 2 })?;
    linalg::spectral_projector(h, |z| z.re < 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CareSolution {
    pub x: CMat,
    /// ‖XQX − XP − P†X − R‖₂; NaN when no problem was supplied.
    pub residual_norm: f64,
    /// max Re λ(P − QX); NaN when no problem was supplied.
    pub stability_margin: f64,
    pub hermiticity_defect: f64,
    /// Conditioning of the least-squares solve that produced `x`.
    pub conditioning: Option<LstsqInfo>,
}

impl CareSolution {
    pub fn is_stabilizing(&self) -> bool {
        self.stability_margin < 0.0
    }
}

pub fn verify_solution(prob: &CareProblem, x: &CMat) -> Result<CareSolution> {
    if x.shape() != (prob.n, prob.n) {
        return Err(Error::Dimension(format!("X is {}x{}, expected {}x{}", x.nrows(), x.ncols(), prob.n, prob.n)));
    }
    let residual_norm = norm2(&prob.residual(x));
    let eigs = linalg::eigenvalues(&prob.closed_loop(x))?;
    let stability_margin = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(CareSolution {
        x: x.clone(),
        residual_norm,
        stability_margin,
        hermiticity_defect: hermiticity_defect(x),
        conditioning: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub rank_rtol: f64,
}

impl Default for SignOptions {
    fn default() -> Self {
        SignOptions { tol: DEFAULT_SIGN_TOL, max_iter: DEFAULT_SIGN_MAX_ITER, rank_rtol: DEFAULT_RANK_RTOL }
    }
}

pub fn solve_care_sign(prob: &CareProblem) -> Result<CareSolution> {
    solve_care_sign_with(prob, &SignOptions::default())
}

/// Solve `S₂ X = −S₁` where `sign(H) + I = (S₁ S₂)`.
pub fn solve_care_sign_with(prob: &CareProblem, opts: &SignOptions) -> Result<CareSolution> {
    let ham = build_hamiltonian(prob);
    require_gap(&ham)?;
    let n = prob.n;
    let s = sign_newton(&ham.h, opts.tol, opts.max_iter)? + eye(2 * n);
    let s1 = s.columns(0, n).into_owned();
    let s2 = s.columns(n, n).into_owned();
    let (x, info) = linalg::lstsq(&s2, &(-s1), opts.rank_rtol)?;
    let mut sol = verify_solution(prob, &x)?;
    sol.conditioning = Some(info);
    Ok(sol)
}

/// `X = −Π₂⁺ Π₁` from `Π_a = (Π₁ Π₂)`.
pub fn extract_solution_from_projector(
    pi_a: &CMat,
    n: usize,
    prob: Option<&CareProblem>,
    rank_rtol: f64,
) -> Result<CareSolution> {
    if pi_a.shape() != (2 * n, 2 * n) {
        return Err(Error::Dimension(format!("projector is {}x{}, expected {}x{}", pi_a.nrows(), pi_a.ncols(), 2 * n, 2 * n)));
    }
    let p1 = pi_a.columns(0, n).into_owned();
    let p2 = pi_a.columns(n, n).into_owned();
    let (x, info) = linalg::lstsq(&p2, &(-p1), rank_rtol)?;
    let mut sol = match prob {
        Some(p) => verify_solution(p, &x)?,
        None => CareSolution {
            hermiticity_defect: hermiticity_defect(&x),
            x,
            residual_norm: f64::NAN,
            stability_margin: f64::NAN,
            conditioning: None,
        },
    };
    sol.conditioning = Some(info);
    Ok(sol)
}

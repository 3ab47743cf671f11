//! Emulated block-encodings: explicit unitaries with their normalization,
//! ancilla counts and error bounds.
//!
//! QSVT steps act on the singular values of the extracted block and
//! re-dilate the result, so the physical unitary stays small. The theorem
//! ancilla counts travel separately in `meta_ancilla` fields.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::linalg::SVD;

use crate::error::{Error, Result};
use crate::linalg::{self, c, ceil_log2, eye, CMat, C64};

pub mod budget;
pub mod pipeline;
pub mod poly;
pub mod unitary;

pub use budget::{plan_budget, BudgetPlan, BudgetSplit};
pub use pipeline::{
    care_solution_encode, column_blocks, kappa2_from_solution, riesz_encode, PipelineConfig, PipelineReport,
};
pub use poly::{build_inverse_polynomial, OddPolynomial};
pub use unitary::Unitary;

/// `U` with `alpha · (⟨0^{aL}| ⊗ I) U (|0^{aR}⟩ ⊗ I) ≈ A`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEncoding {
    pub u: Unitary,
    pub alpha: f64,
    pub a_left: u32,
    pub a_right: u32,
    pub n_left: usize,
    pub n_right: usize,
    pub eps_bound: f64,
    /// Left ancilla count of the circuit the emulation stands in for.
    pub meta_ancilla: u32,
    pub meta_ancilla_right: u32,
}

impl BlockEncoding {
    pub fn block(&self) -> CMat {
        self.u.top_left(self.n_left, self.n_right) * c(self.alpha, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn is_square(&self) -> bool {
        self.n_left == self.n_right
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.u.unitarity_defect()
    }
}

pub fn extract_block(be: &BlockEncoding) -> CMat {
    be.block()
}

fn ancillas_for(dim: usize, logical: usize) -> Result<u32> {
    if logical == 0 || dim % logical != 0 || !(dim / logical).is_power_of_two() {
        return Err(Error::Dimension(format!("register of size {dim} does not factor over logical size {logical}")));
    }
    Ok((dim / logical).trailing_zeros())
}

/// Unitary `[[Ā, (I − ĀĀ†)^½], [(I − Ā†Ā)^½, −Ā†]]` for `Ā = A/alpha`,
/// zero-padded to square first.
fn dilate(a: &CMat) -> CMat {
    let (nl, nr) = a.shape();
    let n = nl.max(nr);
    let mut sq = CMat::zeros(n, n);
    sq.view_mut((0, 0), (nl, nr)).copy_from(a);
    let svd = SVD::new(sq.clone(), true, true);
    let w = svd.u.expect("u requested");
    let v = svd.v_t.expect("v requested").adjoint();
    let comp = svd.singular_values.map(|s| c(libm::sqrt((1.0 - s.min(1.0) * s.min(1.0)).max(0.0)), 0.0));
    let d = CMat::from_diagonal(&comp);
    let top_right = &w * &d * w.adjoint();
    let bottom_left = &v * &d * v.adjoint();
    let mut u = CMat::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(&sq);
    u.view_mut((0, n), (n, n)).copy_from(&top_right);
    u.view_mut((n, 0), (n, n)).copy_from(&bottom_left);
    u.view_mut((n, n), (n, n)).copy_from(&(-sq.adjoint()));
    u
}

/// Exact one-ancilla encoding of `A` at normalization `alpha ≥ ‖A‖`.
pub fn dilation_encode(a: &CMat, alpha: f64) -> Result<BlockEncoding> {
    let norm = linalg::norm2(a);
    if !(alpha > 0.0) || norm > alpha * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} is below the norm {norm}")));
    }
    let (nl, nr) = a.shape();
    let u = dilate(&(a * c(1.0 / alpha, 0.0)));
    let dim = u.nrows();
    let a_left = ancillas_for(dim, nl)?;
    let a_right = ancillas_for(dim, nr)?;
    Ok(BlockEncoding {
        u: Unitary::Dense(u),
        alpha,
        a_left,
        a_right,
        n_left: nl,
        n_right: nr,
        eps_bound: 0.0,
        meta_ancilla: a_left,
        meta_ancilla_right: a_right,
    })
}

/// PREP amplitudes `√(|c_k|/α)` padded to a power of two, SELECT terms with
/// phases folded in. Returns the unitary and `α = Σ|c_k|`.
pub(crate) fn lcu_unitary(coeffs: &[C64], terms: Vec<Unitary>) -> Result<(Unitary, f64)> {
    if coeffs.is_empty() || coeffs.len() != terms.len() {
        return Err(Error::InvalidArgument("LCU needs one coefficient per term and at least one term".into()));
    }
    let d = terms[0].dim();
    if terms.iter().any(|t| t.dim() != d) {
        return Err(Error::Dimension("LCU terms differ in dimension".into()));
    }
    let alpha: f64 = coeffs.iter().map(|z| z.norm()).sum();
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("all LCU coefficients are zero".into()));
    }
    let k = 1usize << ceil_log2(coeffs.len());
    let mut prep = Vec::with_capacity(k);
    let mut sel = Vec::with_capacity(k);
    for (z, t) in coeffs.iter().zip(terms) {
        prep.push(libm::sqrt(z.norm() / alpha));
        let ph = if z.norm() > 0.0 { z / z.norm() } else { linalg::ONE };
        sel.push(if ph == linalg::ONE { t } else { Unitary::Phased(ph, Box::new(t)) });
    }
    while prep.len() < k {
        prep.push(0.0);
        sel.push(Unitary::Identity(d));
    }
    Ok((Unitary::Lcu { prep, terms: sel }, alpha))
}

/// Exact encoding of `Σ c_k U_k` with `α = Σ|c_k|` and `⌈log K⌉` ancillas.
pub fn lcu_combine(terms: &[(C64, CMat)]) -> Result<BlockEncoding> {
    let first = terms.first().ok_or_else(|| Error::InvalidArgument("LCU needs at least one term".into()))?;
    let d = first.1.nrows();
    for (_, u) in terms {
        if u.shape() != (d, d) {
            return Err(Error::Dimension("LCU terms differ in dimension".into()));
        }
    }
    let coeffs: Vec<C64> = terms.iter().map(|t| t.0).collect();
    let units = terms.iter().map(|t| Unitary::Dense(t.1.clone())).collect();
    let (u, alpha) = lcu_unitary(&coeffs, units)?;
    let a = ceil_log2(terms.len());
    Ok(BlockEncoding { u, alpha, a_left: a, a_right: a, n_left: d, n_right: d, eps_bound: 0.0, meta_ancilla: a, meta_ancilla_right: a })
}

/// Encoding of `zI − H` as the two-term LCU `|z|·e^{iφ}I + α_H·(−U_H)`.
/// A zero shift keeps both terms, the first with weight zero.
pub fn shift_encode(be_h: &BlockEncoding, z: C64) -> Result<BlockEncoding> {
    if !be_h.is_square() {
        return Err(Error::Dimension("shift needs a square encoding".into()));
    }
    let d = be_h.dim();
    let ph = if z.norm() > 0.0 { z / z.norm() } else { linalg::ONE };
    let terms = alloc::vec![
        Unitary::Phased(ph, Box::new(Unitary::Identity(d))),
        Unitary::Phased(c(-1.0, 0.0), Box::new(be_h.u.clone())),
    ];
    let (u, alpha) = lcu_unitary(&[c(z.norm(), 0.0), c(be_h.alpha, 0.0)], terms)?;
    Ok(BlockEncoding {
        u,
        alpha,
        a_left: be_h.a_left + 1,
        a_right: be_h.a_right + 1,
        n_left: be_h.n_left,
        n_right: be_h.n_right,
        eps_bound: be_h.eps_bound,
        meta_ancilla: be_h.meta_ancilla + 1,
        meta_ancilla_right: be_h.meta_ancilla_right + 1,
    })
}

/// `W P(Σ) V†` for `b = W Σ V†`, singular values clipped to `[0, 1]`.
pub(crate) fn transform_singular_values(b: &CMat, poly: &OddPolynomial) -> CMat {
    let svd = SVD::new(b.clone(), true, true);
    let w = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v requested");
    let p = svd.singular_values.map(|s| c(poly.eval(s.clamp(0.0, 1.0)), 0.0));
    &w * CMat::from_diagonal(&p) * vt
}

/// Encoding of `P^{SV}(Ã/α)` at normalization one, re-dilated. The error is
/// measured against the function `poly` approximates:
/// `ε′ = ε_pol + 4m√(ε/α)`.
pub fn qsvt_apply_odd(be: &BlockEncoding, poly: &OddPolynomial) -> Result<BlockEncoding> {
    let b = be.u.top_left(be.n_left, be.n_right);
    let out = transform_singular_values(&b, poly);
    let mut enc = dilation_encode(&out, 1.0)?;
    enc.eps_bound = poly.eps_pol + 4.0 * poly.degree as f64 * libm::sqrt(be.eps_bound / be.alpha);
    enc.meta_ancilla = be.meta_ancilla + 1;
    enc.meta_ancilla_right = be.meta_ancilla_right + 1;
    Ok(enc)
}

/// Shared body of [`invert_encode`] and [`pseudoinverse_encode`]: QSVT on
/// the adjoint block, giving `(3α/(8κ)) A⁺` at normalization one, then
/// relabelled as an encoding of `A⁺` at `8κ/(3α)`.
pub(crate) fn qsvt_inverse(be: &BlockEncoding, kappa: f64, poly: &OddPolynomial) -> Result<BlockEncoding> {
    let b = be.u.top_left(be.n_left, be.n_right);
    let sv = linalg::singular_values(&b);
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smax > 1.0 + 1e-10 {
        return Err(Error::NormViolated { sigma_max: smax });
    }
    let slack = be.eps_bound / be.alpha;
    if smin + slack < (1.0 / kappa) * (1.0 - 1e-12) {
        return Err(Error::ConditionViolated { sigma_min: smin, bound: 1.0 / kappa });
    }
    let out = transform_singular_values(&b.adjoint(), poly);
    let mut enc = dilation_encode(&out, 1.0)?;
    let alpha = 8.0 * kappa / (3.0 * be.alpha);
    enc.alpha = alpha;
    enc.eps_bound = alpha * (poly.eps_pol + 4.0 * poly.degree as f64 * libm::sqrt(be.eps_bound / be.alpha));
    enc.meta_ancilla = be.meta_ancilla_right + 1;
    enc.meta_ancilla_right = be.meta_ancilla + 1;
    Ok(enc)
}

/// Encoding of `A⁻¹` at `α′ = 8κ/(3α)`; also returns the polynomial used.
pub fn invert_encode(be: &BlockEncoding, kappa: f64, eps_pol: f64) -> Result<(BlockEncoding, OddPolynomial)> {
    if !be.is_square() {
        return Err(Error::Dimension("inverse needs a square encoding; use pseudoinverse_encode".into()));
    }
    let poly = build_inverse_polynomial(kappa, eps_pol)?;
    let enc = qsvt_inverse(be, kappa, &poly)?;
    Ok((enc, poly))
}

/// Encoding of `Π₂⁺` at `α₊ = 8κ₂/(3α_Π)`.
pub fn pseudoinverse_encode(be_pi2: &BlockEncoding, kappa2: f64, eps_pol_plus: f64) -> Result<(BlockEncoding, OddPolynomial)> {
    let poly = build_inverse_polynomial(kappa2, eps_pol_plus)?;
    let enc = qsvt_inverse(be_pi2, kappa2, &poly)?;
    Ok((enc, poly))
}

/// `(A₁/α₁)(A₂/α₂)` re-dilated, at `α₁α₂`, with
/// `ε₁₂ = α₁ε₂ + (α₂ + ε₂)ε₁` and one extra ancilla on each side.
pub fn product_encode(be1: &BlockEncoding, be2: &BlockEncoding) -> Result<BlockEncoding> {
    if be1.n_right != be2.n_left {
        return Err(Error::Dimension(format!("product of {}x{} and {}x{}", be1.n_left, be1.n_right, be2.n_left, be2.n_right)));
    }
    let b1 = be1.u.top_left(be1.n_left, be1.n_right);
    let b2 = be2.u.top_left(be2.n_left, be2.n_right);
    let mut enc = dilation_encode(&(b1 * b2), 1.0)?;
    enc.alpha = be1.alpha * be2.alpha;
    enc.eps_bound = be1.alpha * be2.eps_bound + (be2.alpha + be2.eps_bound) * be1.eps_bound;
    let pad1 = be2.meta_ancilla.saturating_sub(be1.meta_ancilla_right);
    let pad2 = be1.meta_ancilla_right.saturating_sub(be2.meta_ancilla);
    enc.meta_ancilla = be1.meta_ancilla + pad1 + 1;
    enc.meta_ancilla_right = be2.meta_ancilla_right + pad2 + 1;
    Ok(enc)
}

/// `e^{iφ} U`, encoding `e^{iφ} A`.
pub fn phase_encode(be: &BlockEncoding, phase: C64) -> BlockEncoding {
    BlockEncoding { u: Unitary::Phased(phase, Box::new(be.u.clone())), ..be.clone() }
}

/// `I₂ ⊗ U`: one idle ancilla on both sides.
pub fn pad_ancilla(be: &BlockEncoding) -> BlockEncoding {
    let u = Unitary::Lcu { prep: alloc::vec![1.0, 0.0], terms: alloc::vec![be.u.clone(), be.u.clone()] };
    BlockEncoding {
        u,
        a_left: be.a_left + 1,
        a_right: be.a_right + 1,
        meta_ancilla: be.meta_ancilla + 1,
        meta_ancilla_right: be.meta_ancilla_right + 1,
        ..be.clone()
    }
}

/// Identity encoding of dimension `n` (one ancilla, `α = 1`).
pub fn identity_encode(n: usize) -> BlockEncoding {
    dilation_encode(&eye(n), 1.0).expect("identity has unit norm")
}

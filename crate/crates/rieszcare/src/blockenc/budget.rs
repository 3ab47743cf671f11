//! Splitting a target `ε_X` into the tolerances the pipeline consumes.
//!
//! The final error is
//! `ε_X = α₊ε̄_Π + (α_Π + ε̄_Π) α₊ (ε_pol⁺ + 4m₊√(ε̄_Π/α_Π))`
//! with `ε̄_Π = α_Π(ε_pol^Π + 4m_Π√(ε_H/α_H)) + ε_trap`. Planning uses the
//! structural upper bounds on `α_Π` and `κ₂`, so actual errors come in
//! below plan whenever no floor is hit.

/// Smallest polynomial tolerance requested from the Chebyshev builder.
pub const EPS_POL_FLOOR: f64 = 1e-13;
/// Smallest quadrature tolerance requested.
pub const EPS_TRAP_FLOOR: f64 = 1e-13;

/// Fractions of `ε_X` assigned to each error source.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BudgetSplit {
    pub h: f64,
    pub trap: f64,
    pub pol_pi: f64,
    pub pol_plus: f64,
}

impl Default for BudgetSplit {
    fn default() -> Self {
        BudgetSplit { h: 0.25, trap: 0.25, pol_pi: 0.25, pol_plus: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BudgetPlan {
    pub eps_x_target: f64,
    pub eps_pi_bar: f64,
    /// Largest `ε_H` the plan tolerates.
    pub eps_h_allowed: f64,
    pub eps_trap: f64,
    pub eps_pol_pi: f64,
    pub eps_pol_plus: f64,
    pub alpha_pi_hat: f64,
    pub kappa2_hat: f64,
    pub m_pi_hat: usize,
    pub m_plus_hat: usize,
    /// Some tolerance fell below its floor and was raised to it.
    pub clamped: bool,
}

/// Degree estimate used for planning, `⌈4κ ln(8κ/ε)⌉`.
pub fn estimate_degree(kappa: f64, eps: f64) -> usize {
    libm::ceil(4.0 * kappa * libm::log(8.0 * kappa / eps).max(1.0)) as usize
}

/// Back-solve the tolerances for target `eps_x`. `alpha_pi_hat` is the
/// structural bound `(8/3) M_γ d_γ (1 + b_γ/α_H)`, `kappa` the node
/// condition bound `M_γ(α_H + b_γ)`.
pub fn plan_budget(eps_x: f64, split: BudgetSplit, alpha_pi_hat: f64, alpha_h: f64, kappa: f64, xs_norm: f64) -> BudgetPlan {
    let total = split.h + split.trap + split.pol_pi + split.pol_plus;
    let (fh, ft, fp, fq) = (split.h / total, split.trap / total, split.pol_pi / total, split.pol_plus / total);
    let kappa2_hat = alpha_pi_hat * libm::sqrt(1.0 + xs_norm * xs_norm);
    let alpha_plus = 8.0 * kappa2_hat / (3.0 * alpha_pi_hat);
    let alpha_x = alpha_plus * alpha_pi_hat;

    let mut clamped = false;
    let mut eps_pol_plus = fq * eps_x / alpha_x;
    if eps_pol_plus < EPS_POL_FLOOR {
        eps_pol_plus = EPS_POL_FLOOR;
        clamped = true;
    }
    let eps_pol_plus = eps_pol_plus.min(0.25);
    let m_plus = estimate_degree(kappa2_hat.max(1.0), eps_pol_plus);

    let share = (1.0 - fq) * eps_x;
    let g = |e: f64| alpha_plus * e + (alpha_pi_hat + e) * alpha_plus * 4.0 * m_plus as f64 * libm::sqrt(e / alpha_pi_hat);
    let (mut lo, mut hi) = (0.0f64, eps_x.max(f64::MIN_POSITIVE));
    for _ in 0..200 {
        let mid = if lo > 0.0 { libm::sqrt(lo * hi) } else { hi * 1e-30 };
        if g(mid) <= share {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi <= lo * (1.0 + 1e-12) {
            break;
        }
    }
    let eps_bar = lo;

    let rest = fh + ft + fp;
    let mut eps_trap = eps_bar * ft / rest;
    if eps_trap < EPS_TRAP_FLOOR {
        eps_trap = EPS_TRAP_FLOOR;
        clamped = true;
    }
    let mut eps_pol_pi = eps_bar * fp / rest / alpha_pi_hat;
    if eps_pol_pi < EPS_POL_FLOOR {
        eps_pol_pi = EPS_POL_FLOOR;
        clamped = true;
    }
    let eps_pol_pi = eps_pol_pi.min(0.25);
    let m_pi = estimate_degree(kappa.max(1.0), eps_pol_pi);
    let r = eps_bar * fh / rest / (4.0 * m_pi as f64 * alpha_pi_hat);
    BudgetPlan {
        eps_x_target: eps_x,
        eps_pi_bar: eps_bar,
        eps_h_allowed: alpha_h * r * r,
        eps_trap,
        eps_pol_pi,
        eps_pol_plus,
        alpha_pi_hat,
        kappa2_hat,
        m_pi_hat: m_pi,
        m_plus_hat: m_plus,
        clamped,
    }
}

//! Encoded Riesz projector and encoded stabilizing CARE solution.

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::budget::{plan_budget, BudgetPlan, BudgetSplit};
use super::{lcu_unitary, pad_ancilla, phase_encode, product_encode, pseudoinverse_encode, qsvt_inverse, shift_encode, BlockEncoding, Unitary};
use crate::blockenc::poly::build_inverse_polynomial;
use crate::care::{solve_care_sign, CareProblem};
use crate::contour::{self, QuadratureRule, SmoothedSemicircle, StripBound};
use crate::error::{Error, Result};
use crate::linalg::{self, c, ceil_log2, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LedgerEntry {
    pub stage: &'static str,
    pub left: u32,
    pub right: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PipelineReport {
    pub alpha_h: f64,
    pub eps_h: f64,
    pub nodes: usize,
    /// Shared node condition bound `M_γ(α_H + b_γ)`.
    pub kappa: f64,
    pub alpha_pi: f64,
    pub alpha_pi_bound: f64,
    pub eps_pi: f64,
    pub eps_trap: f64,
    pub eps_pol_pi: f64,
    pub m_pi: usize,
    pub kappa2: f64,
    pub alpha_plus: f64,
    pub eps_plus: f64,
    pub eps_pol_plus: f64,
    pub m_plus: usize,
    pub alpha_x: f64,
    pub eps_x: f64,
    /// Query count to `U_H` of the composed circuit: `m_Π` for the projector,
    /// `(m₊ + 1) m_Π` for the solution.
    pub query_count_h: u64,
    /// `U_H` applications a gate-level run of the emulated circuit would
    /// make over all nodes, `2 m_Π M` per projector use.
    pub emulated_node_queries: u64,
    pub ancilla_ledger: Vec<LedgerEntry>,
    pub budget: Option<BudgetPlan>,
    pub budget_met: bool,
    pub sigma_min_pi2: f64,
    /// `‖extracted X − X_s‖` against the classical solver.
    pub oracle_error_x: f64,
    pub xs_norm: f64,
}

/// `α_Π √(1 + ‖X_s‖²)`.
pub fn kappa2_from_solution(alpha_pi: f64, xs_norm: f64) -> f64 {
    alpha_pi * libm::sqrt(1.0 + xs_norm * xs_norm)
}

/// `(8/3) M_γ d_γ (1 + b_γ/α_H)`.
pub fn alpha_pi_bound(bounds: &StripBound, alpha_h: f64) -> f64 {
    8.0 / 3.0 * bounds.m_gamma * bounds.d_gamma * (1.0 + bounds.b_gamma / alpha_h)
}

/// Node-wise shift, QSVT inversion with the shared `κ = M_γ(α_H + b_γ)`,
/// and an outer LCU with weights `c_k = (8κ/(3Mα_k)) w_k`.
pub fn riesz_encode(be_h: &BlockEncoding, rule: &QuadratureRule, bounds: &StripBound, eps_pol_pi: f64) -> Result<(BlockEncoding, PipelineReport)> {
    if !be_h.is_square() {
        return Err(Error::Dimension("Hamiltonian encoding must be square".into()));
    }
    let alpha_h = be_h.alpha;
    let kappa = (bounds.m_gamma * (alpha_h + bounds.b_gamma)).max(1.0);
    let poly = build_inverse_polynomial(kappa, eps_pol_pi)?;
    let m = rule.m;
    let mut coeffs = Vec::with_capacity(m);
    let mut units = Vec::with_capacity(m);
    for (k, (&z, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let shifted = shift_encode(be_h, z)?;
        let inv = qsvt_inverse(&shifted, kappa, &poly).map_err(|e| node_error(e, k, z))?;
        coeffs.push(w * (inv.alpha / m as f64));
        units.push(inv.u);
    }
    let (u, alpha_pi) = lcu_unitary(&coeffs, units)?;
    let eps_pi = alpha_pi * (poly.eps_pol + 4.0 * poly.degree as f64 * libm::sqrt(be_h.eps_bound / alpha_h));
    let eps_trap = contour::trapezoid_bound(bounds, m);
    let logm = ceil_log2(m);
    let meta = be_h.meta_ancilla + logm + 2;
    let enc = BlockEncoding {
        u,
        alpha: alpha_pi,
        a_left: logm + 1,
        a_right: logm + 1,
        n_left: be_h.n_left,
        n_right: be_h.n_right,
        eps_bound: eps_pi + eps_trap,
        meta_ancilla: meta,
        meta_ancilla_right: meta,
    };
    let report = PipelineReport {
        alpha_h,
        eps_h: be_h.eps_bound,
        nodes: m,
        kappa,
        alpha_pi,
        alpha_pi_bound: alpha_pi_bound(bounds, alpha_h),
        eps_pi,
        eps_trap,
        eps_pol_pi: poly.eps_pol,
        m_pi: poly.degree,
        query_count_h: poly.degree as u64,
        emulated_node_queries: 2 * poly.degree as u64 * m as u64,
        ancilla_ledger: alloc::vec![
            LedgerEntry { stage: "H", left: be_h.meta_ancilla, right: be_h.meta_ancilla_right },
            LedgerEntry { stage: "Pi_a", left: meta, right: meta },
        ],
        ..Default::default()
    };
    Ok((enc, report))
}

fn node_error(e: Error, k: usize, z: C64) -> Error {
    match e {
        Error::ConditionViolated { sigma_min, bound } => Error::NodeCondition { node: k, re: z.re, im: z.im, sigma_min, bound },
        other => other,
    }
    .at("node_inversion")
}

/// Rectangular encodings of the column blocks of `Π_a = (Π₁ Π₂)`: `Π₁`
/// reads the first half of the columns, `Π₂` reads them after the
/// half-swap `I ⊗ X ⊗ I_n`.
pub fn column_blocks(be_pi: &BlockEncoding) -> Result<(BlockEncoding, BlockEncoding)> {
    if !be_pi.is_square() || be_pi.n_left % 2 != 0 {
        return Err(Error::Dimension(alloc::format!("projector encoding has logical size {}x{}", be_pi.n_left, be_pi.n_right)));
    }
    let n = be_pi.n_left / 2;
    let p1 = BlockEncoding {
        n_right: n,
        a_right: be_pi.a_right + 1,
        meta_ancilla_right: be_pi.meta_ancilla_right + 1,
        ..be_pi.clone()
    };
    let p2 = BlockEncoding { u: Unitary::RightSwap { inner: Box::new(be_pi.u.clone()), n }, ..p1.clone() };
    Ok((p1, p2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub eps_x: f64,
    pub split: BudgetSplit,
    pub eps_trap: Option<f64>,
    pub eps_pol_pi: Option<f64>,
    pub eps_pol_plus: Option<f64>,
    /// Fixed node count instead of the a-priori choice.
    pub nodes: Option<usize>,
    pub samples: Option<usize>,
    pub safety: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eps_x: 1e-2,
            split: BudgetSplit::default(),
            eps_trap: None,
            eps_pol_pi: None,
            eps_pol_plus: None,
            nodes: None,
            samples: None,
            safety: contour::DEFAULT_SAFETY,
        }
    }
}

fn problem_from_hamiltonian(h: &CMat) -> Result<CareProblem> {
    let n = h.nrows() / 2;
    let p = h.view((0, 0), (n, n)).into_owned();
    let q = -h.view((0, n), (n, n)).into_owned();
    let r = -h.view((n, 0), (n, n)).into_owned();
    // The encoded block carries rounding; symmetrize before the check.
    let q = (&q + q.adjoint()) * c(0.5, 0.0);
    let r = (&r + r.adjoint()) * c(0.5, 0.0);
    CareProblem::new(p, q, r)
}

/// Riesz projector encoding, column blocks, QSVT pseudoinverse of `Π₂`
/// and the product with `−Π₁`.
pub fn care_solution_encode(be_h: &BlockEncoding, contour: &SmoothedSemicircle, config: &PipelineConfig) -> Result<(BlockEncoding, PipelineReport)> {
    let h = be_h.block();
    if h.nrows() % 2 != 0 || !be_h.is_square() {
        return Err(Error::Dimension("Hamiltonian encoding must be square of even size".into()).at("care_solution_encode"));
    }
    let n = h.nrows() / 2;
    let prob = problem_from_hamiltonian(&h).map_err(|e| e.at("classical_reference"))?;
    let xs = solve_care_sign(&prob).map_err(|e| e.at("classical_reference"))?;
    let xs_norm = linalg::norm2(&xs.x);

    let samples = config.samples.unwrap_or_else(|| contour::default_samples(contour));
    let bounds = contour::resolvent_bounds_with(&h, contour, contour::admissible_eta(contour), samples, config.safety)
        .map_err(|e| e.at("resolvent_bounds"))?;
    let alpha_h = be_h.alpha;
    let kappa = (bounds.m_gamma * (alpha_h + bounds.b_gamma)).max(1.0);
    let a_hat = alpha_pi_bound(&bounds, alpha_h);
    let plan = plan_budget(config.eps_x, config.split, a_hat, alpha_h, kappa, xs_norm);
    let eps_trap = config.eps_trap.unwrap_or(plan.eps_trap);
    let eps_pol_pi = config.eps_pol_pi.unwrap_or(plan.eps_pol_pi);
    let eps_pol_plus = config.eps_pol_plus.unwrap_or(plan.eps_pol_plus);
    let m = config.nodes.unwrap_or_else(|| contour::nodes_for_accuracy(&bounds, eps_trap));
    let rule = contour::quadrature_nodes(contour, m).map_err(|e| e.at("quadrature_nodes"))?;

    let (be_pi, mut report) = riesz_encode(be_h, &rule, &bounds, eps_pol_pi).map_err(|e| e.at("riesz_encode"))?;
    let (p1, p2) = column_blocks(&be_pi).map_err(|e| e.at("column_blocks"))?;
    report.sigma_min_pi2 = linalg::sigma_min(&p2.block());
    let kappa2 = kappa2_from_solution(be_pi.alpha, xs_norm);
    let (pinv, poly_plus) = pseudoinverse_encode(&p2, kappa2, eps_pol_plus).map_err(|e| e.at("pseudoinverse_encode"))?;
    let neg_p1 = pad_ancilla(&phase_encode(&p1, c(-1.0, 0.0)));
    let x_enc = product_encode(&pinv, &neg_p1).map_err(|e| e.at("product_encode"))?;

    let ex = x_enc.block();
    report.kappa2 = kappa2;
    report.alpha_plus = pinv.alpha;
    report.eps_plus = pinv.eps_bound;
    report.eps_pol_plus = poly_plus.eps_pol;
    report.m_plus = poly_plus.degree;
    report.alpha_x = x_enc.alpha;
    report.eps_x = x_enc.eps_bound;
    report.query_count_h = (poly_plus.degree as u64 + 1) * report.m_pi as u64;
    report.emulated_node_queries *= poly_plus.degree as u64 + 1;
    report.ancilla_ledger.push(LedgerEntry { stage: "Pi_1", left: p1.meta_ancilla, right: p1.meta_ancilla_right });
    report.ancilla_ledger.push(LedgerEntry { stage: "Pi_2", left: p2.meta_ancilla, right: p2.meta_ancilla_right });
    report.ancilla_ledger.push(LedgerEntry { stage: "Pi_2^+", left: pinv.meta_ancilla, right: pinv.meta_ancilla_right });
    report.ancilla_ledger.push(LedgerEntry { stage: "-Pi_1 padded", left: neg_p1.meta_ancilla, right: neg_p1.meta_ancilla_right });
    report.ancilla_ledger.push(LedgerEntry { stage: "X", left: x_enc.meta_ancilla, right: x_enc.meta_ancilla_right });
    report.budget = Some(plan);
    report.budget_met = x_enc.eps_bound <= config.eps_x;
    report.oracle_error_x = linalg::norm2(&(ex - &xs.x));
    report.xs_norm = xs_norm;
    debug_assert_eq!(x_enc.n_left, n);
    Ok((x_enc, report))
}

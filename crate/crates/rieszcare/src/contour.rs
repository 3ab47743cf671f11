//! Smoothed-semicircle contour, strip bookkeeping and trapezoid quadrature
//! of the antistable Riesz projector.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, c, eye, CMat, C64};

/// `γ(θ) = z0 + ½(R cos θ + √(ω² + R² cos² θ)) + i R sin θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SmoothedSemicircle {
    pub z0: f64,
    pub r: f64,
    pub omega: f64,
}

impl SmoothedSemicircle {
    pub fn new(z0: f64, r: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !(r > 0.0) || !(z0 >= 0.0) {
            return Err(Error::InvalidArgument(alloc::format!(
                "contour needs omega > 0, R > 0, z0 >= 0 (got z0={z0}, R={r}, omega={omega})"
            )));
        }
        Ok(SmoothedSemicircle { z0, r, omega })
    }

    pub fn point(&self, theta: f64) -> C64 {
        let (s, co) = libm::sincos(theta);
        let root = libm::sqrt(self.omega * self.omega + self.r * self.r * co * co);
        c(self.z0 + 0.5 * (self.r * co + root), self.r * s)
    }

    pub fn derivative(&self, theta: f64) -> C64 {
        let (s, co) = libm::sincos(theta);
        let root = libm::sqrt(self.omega * self.omega + self.r * self.r * co * co);
        c(-0.5 * self.r * s * (1.0 + self.r * co / root), self.r * co)
    }

    /// Holomorphic extension to complex `θ` (principal square root, analytic
    /// for `|Im θ| < χ`).
    pub fn point_complex(&self, theta: C64) -> C64 {
        let co = theta.cos();
        let root = (c(self.omega * self.omega, 0.0) + co * co * (self.r * self.r)).sqrt();
        c(self.z0, 0.0) + (co * self.r + root) * 0.5 + C64::i() * theta.sin() * self.r
    }

    pub fn derivative_complex(&self, theta: C64) -> C64 {
        let (s, co) = (theta.sin(), theta.cos());
        let root = (c(self.omega * self.omega, 0.0) + co * co * (self.r * self.r)).sqrt();
        -(s * (self.r * 0.5)) * (C64::new(1.0, 0.0) + co * self.r / root) + C64::i() * co * self.r
    }

    /// Closed-form bound on `|γ(θ)|`.
    pub fn magnitude_bound(&self) -> f64 {
        self.z0 + 0.5 * self.omega + self.r
    }
}

pub fn semicircle_point(c: &SmoothedSemicircle, theta: f64) -> C64 {
    c.point(theta)
}

pub fn semicircle_derivative(c: &SmoothedSemicircle, theta: f64) -> C64 {
    c.derivative(theta)
}

/// `z0 = 0`, `ω = δ`, `R = 2 α_H`.
pub fn select_parameters(alpha_h: f64, delta: f64) -> Result<SmoothedSemicircle> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("gap delta must be positive, got {delta}")));
    }
    if alpha_h < delta {
        return Err(Error::InvalidArgument(alloc::format!("alpha_H = {alpha_h} is below the gap {delta}")));
    }
    SmoothedSemicircle::new(0.0, 2.0 * alpha_h, delta)
}

pub const DEFAULT_SAFETY: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StripBound {
    pub chi: f64,
    pub eta: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub m_gamma: f64,
    pub d_gamma: f64,
    pub b_gamma: f64,
    /// Inflation applied to the sampled maxima.
    pub safety: f64,
}

/// Strip data that needs no knowledge of `H`: `χ`, `η⋆`, `d_γ = R` and the
/// closed-form `b_γ`. The resolvent fields are left at zero.
pub fn strip_width(c: &SmoothedSemicircle) -> StripBound {
    let chi = libm::asinh(c.omega / c.r);
    StripBound {
        chi,
        eta: chi / 16.0,
        gamma_plus: 0.0,
        gamma_minus: 0.0,
        m_gamma: 0.0,
        d_gamma: c.r,
        b_gamma: c.magnitude_bound(),
        safety: 1.0,
    }
}

pub fn admissible_eta(c: &SmoothedSemicircle) -> f64 {
    libm::asinh(c.omega / c.r) / 16.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub contour: SmoothedSemicircle,
    pub m: usize,
    pub thetas: Vec<f64>,
    pub nodes: Vec<C64>,
    /// `w_k = γ′(θ_k)/i`.
    pub weights: Vec<C64>,
}

pub fn quadrature_nodes(c: &SmoothedSemicircle, m: usize) -> Result<QuadratureRule> {
    if m < 1 {
        return Err(Error::InvalidArgument("quadrature needs at least one node".into()));
    }
    let thetas: Vec<f64> = (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect();
    let nodes = thetas.iter().map(|&t| c.point(t)).collect();
    let weights = thetas.iter().map(|&t| c.derivative(t) * c_neg_i()).collect();
    Ok(QuadratureRule { contour: *c, m, thetas, nodes, weights })
}

fn c_neg_i() -> C64 {
    c(0.0, -1.0)
}

/// Smallest acceptable LU pivot ratio for a node resolvent.
pub const NODE_RCOND: f64 = 1e-13;

/// `(z I − H)⁻¹` for each node, by LU.
pub fn node_resolvents(h: &CMat, rule: &QuadratureRule) -> Result<Vec<CMat>> {
    let n = h.nrows();
    let id = eye(n);
    rule.nodes
        .iter()
        .enumerate()
        .map(|(k, &z)| {
            let shifted = &id * z - h;
            linalg::lu_solve(&shifted, &id, NODE_RCOND).map_err(|_| Error::NodeSingular { node: k, re: z.re, im: z.im })
        })
        .collect()
}

/// `Π_{a,M} = (1/M) Σ_k w_k (z_k I − H)⁻¹`, summed pairwise in node order.
pub fn riesz_projector_quadrature(h: &CMat, rule: &QuadratureRule) -> Result<CMat> {
    let res = node_resolvents(h, rule)?;
    let scale = 1.0 / rule.m as f64;
    let parts: Vec<CMat> = res.into_iter().zip(&rule.weights).map(|(r, &w)| r * (w * scale)).collect();
    Ok(linalg::tree_sum(parts).unwrap_or_else(|| CMat::zeros(h.nrows(), h.ncols())))
}

/// Trapezoid bound `(γ₋ + γ₊)/(e^{ηM} − 1)`.
pub fn trapezoid_bound(bound: &StripBound, m: usize) -> f64 {
    let d = libm::expm1(bound.eta * m as f64);
    if d <= 0.0 {
        return f64::INFINITY;
    }
    (bound.gamma_minus + bound.gamma_plus) / d
}

/// `M = ⌈max_± ln(2γ±/ε + 1)/η⌉`, at least 1.
pub fn nodes_for_accuracy(bound: &StripBound, eps_trap: f64) -> usize {
    let g = bound.gamma_plus.max(bound.gamma_minus);
    let m = libm::ceil(libm::log(2.0 * g / eps_trap + 1.0) / bound.eta);
    if m.is_finite() && m >= 1.0 {
        m as usize
    } else {
        1
    }
}

/// A grid size that resolves resolvent peaks of width about `ω/R` in `θ`.
pub fn default_samples(c: &SmoothedSemicircle) -> usize {
    let want = libm::ceil(32.0 * PI * c.r / c.omega) as usize;
    want.clamp(256, 1 << 16)
}

fn resolvent_norm(h: &CMat, z: C64) -> Option<f64> {
    let n = h.nrows();
    let smin = linalg::sigma_min(&(eye(n) * z - h));
    let floor = 1e-14 * linalg::norm2(h).max(1.0);
    if smin <= floor {
        None
    } else {
        Some(1.0 / smin)
    }
}

/// Sampled `M_γ` on the contour and `γ±` on the lines `Im θ = ±η`, each
/// inflated by `safety`. `d_γ = R` and `b_γ` are the closed-form bounds.
pub fn resolvent_bounds_with(h: &CMat, c: &SmoothedSemicircle, eta: f64, samples: usize, safety: f64) -> Result<StripBound> {
    if samples < 8 {
        return Err(Error::InvalidArgument(alloc::format!("need at least 8 samples, got {samples}")));
    }
    let mut sb = strip_width(c);
    sb.eta = eta;
    sb.safety = safety;
    let (mut mg, mut gp, mut gm) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..samples {
        let t = 2.0 * PI * j as f64 / samples as f64;
        let z = c.point(t);
        let r0 = resolvent_norm(h, z).ok_or(Error::NodeSingular { node: j, re: z.re, im: z.im })?;
        mg = mg.max(r0);
        for (sign, acc) in [(1.0, &mut gp), (-1.0, &mut gm)] {
            let th = c_complex(t, sign * eta);
            let zs = c.point_complex(th);
            let r = resolvent_norm(h, zs).ok_or(Error::StripTooWide { theta: t })?;
            *acc = acc.max(r * c.derivative_complex(th).norm());
        }
    }
    sb.m_gamma = mg * safety;
    sb.gamma_plus = gp * safety;
    sb.gamma_minus = gm * safety;
    Ok(sb)
}

fn c_complex(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn resolvent_bounds(h: &CMat, c: &SmoothedSemicircle, eta: f64, samples: usize) -> Result<StripBound> {
    resolvent_bounds_with(h, c, eta, samples, DEFAULT_SAFETY)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuadratureErrorReport {
    pub eps_trap_bound: f64,
    pub eps_trap_measured: Option<f64>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StudyRow {
    pub m: usize,
    pub eps_measured: f64,
    pub eps_bound: f64,
    pub eta: f64,
    pub chi: f64,
    pub m_gamma: f64,
}

/// Quadrature error against `exact` for each node count in `ms`.
pub fn convergence_study(h: &CMat, exact: &CMat, c: &SmoothedSemicircle, bound: &StripBound, ms: &[usize]) -> Result<Vec<StudyRow>> {
    ms.iter()
        .map(|&m| {
            let rule = quadrature_nodes(c, m)?;
            let pi = riesz_projector_quadrature(h, &rule)?;
            Ok(StudyRow {
                m,
                eps_measured: linalg::norm2(&(pi - exact)),
                eps_bound: trapezoid_bound(bound, m),
                eta: bound.eta,
                chi: bound.chi,
                m_gamma: bound.m_gamma,
            })
        })
        .collect()
}

/// Least-squares slope of `ln err` against `M` over points with
/// `err > floor`. `None` with fewer than two usable points.
pub fn fit_slope(points: &[(usize, f64)], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > floor).map(|&(m, e)| (m as f64, libm::log(e))).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Winding number of the polygon through `samples` contour points about `z`.
pub fn winding_number(c: &SmoothedSemicircle, z: C64, samples: usize) -> i32 {
    let mut total = 0.0;
    let mut prev = c.point(0.0) - z;
    for j in 1..=samples {
        let t = 2.0 * PI * j as f64 / samples as f64;
        let cur = c.point(t) - z;
        total += (cur / prev).arg();
        prev = cur;
    }
    libm::round(total / (2.0 * PI)) as i32
}

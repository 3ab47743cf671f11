//! Trace readout `Tr(BT)` from a block-encoding of `T` and sparse state
//! encodings of `B`, through a simulated phase-shifted Hadamard test and
//! QFT-free amplitude estimation.
//!
//! Registers: the doubled logical register has index `ν·n + μ`, with `T`
//! acting on `ν`. The Hadamard-test work register is `U_T`'s register
//! tensored with `μ`; the composite used by amplitude estimation puts the
//! control qubit first, then the rotation qubit, then the work register.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::blockenc::BlockEncoding;
use crate::error::{Error, Result};
use crate::gen;
use crate::linalg::{c, CMat, CVec, C64, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseStatePair {
    pub n: usize,
    pub chi: CVec,
    pub eta: CVec,
    pub lambda_b: f64,
    pub row_norms: Vec<f64>,
    /// Rows with at least one nonzero entry.
    pub row_count: usize,
    /// Largest number of nonzeros in a row.
    pub row_sparsity: usize,
    pub max_abs: f64,
    pub nnz: usize,
}

impl SparseStatePair {
    /// `r_B √s_B ‖B‖_max`.
    pub fn lambda_bound(&self) -> f64 {
        self.row_count as f64 * libm::sqrt(self.row_sparsity as f64) * self.max_abs
    }
}

/// `|χ_B⟩ = Σ_μ √(β_μ/Λ_B) |b_μ⟩|μ⟩` with `|b_μ⟩ = Σ_ν B̄_{μν}|ν⟩/β_μ`, and
/// `|η_B⟩ = Σ_μ √(β_μ/Λ_B) |μ⟩|μ⟩`.
pub fn state_encodings(b: &CMat) -> Result<SparseStatePair> {
    let n = b.nrows();
    if b.ncols() != n || n == 0 {
        return Err(Error::Dimension(format!("B must be square and nonempty, got {}x{}", b.nrows(), b.ncols())));
    }
    let row_norms: Vec<f64> = (0..n).map(|mu| libm::sqrt(b.row(mu).iter().map(|z| z.norm_sqr()).sum())).collect();
    let lambda_b: f64 = row_norms.iter().sum();
    if lambda_b == 0.0 {
        return Err(Error::InvalidArgument("B is the zero matrix".into()));
    }
    let mut chi = CVec::zeros(n * n);
    let mut eta = CVec::zeros(n * n);
    for mu in 0..n {
        let beta = row_norms[mu];
        if beta == 0.0 {
            continue;
        }
        let w = libm::sqrt(beta / lambda_b);
        eta[mu * n + mu] = c(w, 0.0);
        for nu in 0..n {
            chi[nu * n + mu] = b[(mu, nu)].conj() * (w / beta);
        }
    }
    let nz_row = |mu: usize| b.row(mu).iter().filter(|z| **z != ZERO).count();
    Ok(SparseStatePair {
        n,
        chi,
        eta,
        lambda_b,
        row_count: (0..n).filter(|&mu| row_norms[mu] > 0.0).count(),
        row_sparsity: (0..n).map(nz_row).max().unwrap_or(0),
        max_abs: b.iter().map(|z| z.norm()).fold(0.0, f64::max),
        nnz: (0..n).map(nz_row).sum(),
        row_norms,
    })
}

/// `⟨χ_B|(T ⊗ I)|η_B⟩`, equal to `Tr(BT)/Λ_B`.
pub fn trace_overlap_exact(t: &CMat, pair: &SparseStatePair) -> Result<C64> {
    let n = pair.n;
    if t.shape() != (n, n) {
        return Err(Error::Dimension(format!("T is {}x{}, B is {n}x{n}", t.nrows(), t.ncols())));
    }
    let mut acc = ZERO;
    for nu in 0..n {
        for mu in 0..n {
            let chi = pair.chi[nu * n + mu];
            if chi == ZERO {
                continue;
            }
            let mut tv = ZERO;
            for k in 0..n {
                tv += t[(nu, k)] * pair.eta[k * n + mu];
            }
            acc += chi.conj() * tv;
        }
    }
    Ok(acc)
}

/// Unitary taking `|0⟩` to the unit vector `v`: a Householder reflection
/// times the phase of `v₀`.
struct Prep {
    u: CVec,
    uu: f64,
    phase: C64,
}

impl Prep {
    fn new(v: &CVec) -> Self {
        let phase = if v[0].norm() > 0.0 { v[0] / v[0].norm() } else { ONE };
        let mut u = -v.clone();
        u[0] += phase;
        let uu = u.norm_squared();
        Prep { u, uu, phase }
    }

    fn reflect(&self, x: &mut [C64]) {
        // `v` already equals `phase·e₀` up to roundoff, and a reflection
        // about a roundoff-sized axis would be arbitrary.
        if self.uu <= 1e-26 {
            return;
        }
        let d = self.u.len();
        let mut dot = ZERO;
        for i in 0..d {
            dot += self.u[i].conj() * x[i];
        }
        let f = dot * (2.0 / self.uu);
        for i in 0..d {
            x[i] -= self.u[i] * f;
        }
    }

    fn apply(&self, x: &mut [C64], adjoint: bool) {
        self.reflect(x);
        let ph = if adjoint { self.phase.conj() } else { self.phase };
        for z in x.iter_mut() {
            *z *= ph;
        }
    }
}

/// The Hadamard-test unitary `W_θ` on `control ⊗ work`, applied to vectors.
struct HadamardCircuit {
    theta: f64,
    u: CMat,
    n: usize,
    work: usize,
    p_phi: Prep,
    p_psi: Prep,
}

impl HadamardCircuit {
    fn new(be_t: &BlockEncoding, pair: &SparseStatePair, theta: f64) -> Result<Self> {
        if !be_t.is_square() || be_t.n_left != pair.n {
            return Err(Error::Dimension(format!("T encoding is {}x{}, B is {}x{}", be_t.n_left, be_t.n_right, pair.n, pair.n)));
        }
        let n = pair.n;
        let dt = be_t.dim();
        let work = dt * n;
        // |0^a⟩ ⊗ |v⟩ occupies the first n² work indices.
        let embed = |v: &CVec| {
            let mut w = CVec::zeros(work);
            w.rows_mut(0, n * n).copy_from(v);
            w
        };
        Ok(HadamardCircuit {
            theta,
            u: be_t.u.to_dense(),
            n,
            work,
            p_phi: Prep::new(&embed(&pair.chi)),
            p_psi: Prep::new(&embed(&pair.eta)),
        })
    }

    /// `(U_T ⊗ I_n)` or its adjoint on a work vector.
    fn apply_u(&self, x: &mut [C64], adjoint: bool) {
        let n = self.n;
        let dt = self.work / n;
        let mut out = alloc::vec![ZERO; self.work];
        for mu in 0..n {
            for i in 0..dt {
                let mut s = ZERO;
                for j in 0..dt {
                    let uij = if adjoint { self.u[(j, i)].conj() } else { self.u[(i, j)] };
                    s += uij * x[j * n + mu];
                }
                out[i * n + mu] = s;
            }
        }
        x.copy_from_slice(&out);
    }

    fn hadamard(&self, x: &mut [C64]) {
        let w = self.work;
        for i in 0..w {
            let (a, b) = (x[i], x[w + i]);
            x[i] = (a + b) * FRAC_1_SQRT_2;
            x[w + i] = (a - b) * FRAC_1_SQRT_2;
        }
    }

    fn phase(&self, x: &mut [C64], adjoint: bool) {
        let ph = C64::from_polar(1.0, if adjoint { -self.theta } else { self.theta });
        for z in x[self.work..].iter_mut() {
            *z *= ph;
        }
    }

    /// `W_θ` on a `2·work` vector.
    fn apply(&self, x: &mut [C64]) {
        let w = self.work;
        self.hadamard(x);
        self.phase(x, false);
        let (lo, hi) = x.split_at_mut(w);
        self.p_phi.apply(lo, false);
        self.p_psi.apply(hi, false);
        self.apply_u(hi, false);
        self.hadamard(x);
    }

    fn apply_adjoint(&self, x: &mut [C64]) {
        let w = self.work;
        self.hadamard(x);
        let (lo, hi) = x.split_at_mut(w);
        self.p_phi.apply(lo, true);
        self.apply_u(hi, true);
        self.p_psi.apply(hi, true);
        self.phase(x, true);
        self.hadamard(x);
    }

    /// `W_θ|0⟩`.
    fn prepared(&self) -> Vec<C64> {
        let mut x = alloc::vec![ZERO; 2 * self.work];
        x[0] = ONE;
        self.apply(&mut x);
        x
    }
}

/// Probability of control outcome 0, `(1 + Re[e^{iθ}A_{B,T}])/2`, read off
/// the simulated pre-measurement state.
pub fn hadamard_p0(be_t: &BlockEncoding, pair: &SparseStatePair, theta: f64) -> Result<f64> {
    let circ = HadamardCircuit::new(be_t, pair, theta)?;
    let x = circ.prepared();
    Ok(x[..circ.work].iter().map(|z| z.norm_sqr()).sum::<f64>().clamp(0.0, 1.0))
}

fn binomial(rng: &mut impl Rng, n: u64, p: f64) -> u64 {
    Binomial::new(n, p.clamp(0.0, 1.0)).expect("p clamped to [0, 1]").sample(rng)
}

/// Mean of `shots` ±1 outcomes of the Hadamard test; its expectation is
/// `Re[e^{iθ} A_{B,T}]`.
pub fn hadamard_test(be_t: &BlockEncoding, pair: &SparseStatePair, theta: f64, shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let p0 = hadamard_p0(be_t, pair, theta)?;
    let zeros = binomial(&mut gen::rng(seed), shots, p0);
    Ok((2.0 * zeros as f64 - shots as f64) / shots as f64)
}

/// Hoeffding radius for the mean of `shots` ±1 samples at failure `pf`.
pub fn hoeffding_radius(shots: u64, pf: f64) -> f64 {
    libm::sqrt(2.0 * libm::log(2.0 / pf) / shots as f64)
}

/// Shots per amplitude-estimation round.
pub const AE_SHOTS: u64 = 128;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimateBudget {
    pub eps_t: f64,
    /// Largest `ε_T` the estimate tolerates, `eps/(2Λ_B)`.
    pub eps_t_allowed: f64,
    /// Amplitude error target `eps/(16 α_T Λ_B)`.
    pub gamma: f64,
    /// `Λ_B ε_T`.
    pub systematic_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EstimateReport {
    pub value: C64,
    pub target_eps: f64,
    pub pf: f64,
    pub shots: u64,
    /// Applications of `W_θ` or `W_θ†`.
    pub grover_queries: u64,
    pub rounds: usize,
    pub max_power: u64,
    pub lambda_hat: [f64; 2],
    pub alpha_t: f64,
    pub lambda_b: f64,
    pub budget: EstimateBudget,
    pub seed: u64,
}

/// Amplitude estimation of `λ_θ = √p₀(θ)` on the composite register, with
/// the good subspace marked by control and rotation qubit both zero.
struct AmplitudeEstimator {
    circ: HadamardCircuit,
}

impl AmplitudeEstimator {
    fn dim(&self) -> usize {
        4 * self.circ.work
    }

    /// `(W_θ ⊗ R)` with the rotation qubit in the middle of the index,
    /// `R = R_y(π/2)`.
    fn a(&mut self, x: &mut [C64], adjoint: bool) {
        let w = self.circ.work;
        let mut parts = [alloc::vec![ZERO; 2 * w], alloc::vec![ZERO; 2 * w]];
        for cbit in 0..2 {
            for r in 0..2 {
                let src = &x[(cbit * 2 + r) * w..(cbit * 2 + r + 1) * w];
                parts[r][cbit * w..(cbit + 1) * w].copy_from_slice(src);
            }
        }
        for p in parts.iter_mut() {
            if adjoint {
                self.circ.apply_adjoint(p);
            } else {
                self.circ.apply(p);
            }
        }
        let s = if adjoint { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
        for cbit in 0..2 {
            for i in 0..w {
                let (z0, z1) = (parts[0][cbit * w + i], parts[1][cbit * w + i]);
                x[(cbit * 2) * w + i] = z0 * FRAC_1_SQRT_2 - z1 * s;
                x[(cbit * 2 + 1) * w + i] = z0 * s + z1 * FRAC_1_SQRT_2;
            }
        }
    }

    fn grover(&mut self, x: &mut [C64]) {
        let w = self.circ.work;
        for z in x[..w].iter_mut() {
            *z = -*z;
        }
        self.a(x, true);
        x[0] = -x[0];
        self.a(x, false);
    }

    fn good_probability(x: &[C64], w: usize) -> f64 {
        x[..w].iter().map(|z| z.norm_sqr()).sum::<f64>().clamp(0.0, 1.0)
    }
}

fn find_next_k(k: u64, lo: f64, hi: f64, up: bool) -> (u64, bool) {
    let ki = 4 * k + 2;
    let kmax = libm::floor(PI / (hi - lo)).min(1e12) as u64;
    if kmax < 2 {
        return (k, up);
    }
    let mut kk = kmax - (kmax + 2) % 4;
    while kk >= 2 * ki {
        let a = (kk as f64 * lo) % (2.0 * PI);
        let b = (kk as f64 * hi) % (2.0 * PI);
        if a <= PI && b <= PI && b >= a {
            return ((kk - 2) / 4, true);
        }
        if a >= PI && b >= PI && b >= a {
            return ((kk - 2) / 4, false);
        }
        kk -= 4;
    }
    (k, up)
}

struct AeOutcome {
    theta: f64,
    shots: u64,
    charged: u64,
    rounds: usize,
    max_power: u64,
}

/// Iterative QFT-free estimation of the angle `θ_a` with
/// `sin²θ_a = P(good)`, to half-width `eps_theta` at failure `pf`.
fn estimate_angle(est: &mut AmplitudeEstimator, eps_theta: f64, pf: f64, rng: &mut impl Rng) -> AeOutcome {
    let w = est.circ.work;
    let t_rounds = libm::ceil(libm::log2(PI / (8.0 * eps_theta))).max(1.0);
    let radius = |n: u64| libm::sqrt(libm::log(2.0 * t_rounds / pf) / (2.0 * n as f64));
    let (mut lo, mut hi) = (0.0f64, FRAC_PI_2);
    let (mut k, mut up) = (0u64, true);
    let mut state = alloc::vec![ZERO; est.dim()];
    state[0] = ONE;
    est.a(&mut state, false);
    let mut state_k = 0u64;
    let (mut hits, mut total) = (0u64, 0u64);
    let mut out = AeOutcome { theta: 0.0, shots: 0, charged: 0, rounds: 0, max_power: 0 };
    let cap = 4 * t_rounds as usize + 16;
    while hi - lo > 2.0 * eps_theta && out.rounds < cap {
        out.rounds += 1;
        let (nk, nup) = find_next_k(k, lo, hi, up);
        if nk != k {
            hits = 0;
            total = 0;
        }
        k = nk;
        up = nup;
        // Advance the cached G^k A|0⟩; each iterate is two circuit queries.
        while state_k < k {
            est.grover(&mut state);
            state_k += 1;
        }
        let p = AmplitudeEstimator::good_probability(&state, w);
        let got = binomial(rng, AE_SHOTS, p);
        // Every shot re-prepares G^k A|0⟩, which is 2k + 1 circuit uses.
        out.charged += AE_SHOTS * (2 * k + 1);
        hits += got;
        total += AE_SHOTS;
        out.shots += AE_SHOTS;
        out.max_power = out.max_power.max(2 * k + 1);
        let kk = (4 * k + 2) as f64;
        let a = hits as f64 / total as f64;
        let e = radius(total);
        let (amin, amax) = ((a - e).max(0.0), (a + e).min(1.0));
        let (tmin, tmax) = if up {
            (libm::acos(1.0 - 2.0 * amin), libm::acos(1.0 - 2.0 * amax))
        } else {
            (2.0 * PI - libm::acos(1.0 - 2.0 * amax), 2.0 * PI - libm::acos(1.0 - 2.0 * amin))
        };
        let base_lo = libm::floor(kk * lo / (2.0 * PI)) * 2.0 * PI;
        let base_hi = libm::floor(kk * hi / (2.0 * PI)) * 2.0 * PI;
        let nlo = (base_lo + tmin) / kk;
        let nhi = (base_hi + tmax) / kk;
        lo = lo.max(nlo);
        hi = hi.min(nhi).max(lo);
    }
    out.theta = 0.5 * (lo + hi);
    out
}

/// `τ̂ = α_T Λ_B Â` with `Â = (2λ̂₀² − 1) + i(2λ̂²_{−π/2} − 1)`, each `λ̂`
/// estimated to `γ = eps/(16 α_T Λ_B)` at failure `pf/2`.
pub fn amplitude_estimate_trace(be_t: &BlockEncoding, pair: &SparseStatePair, eps: f64, pf: f64, seed: u64) -> Result<EstimateReport> {
    if !(eps > 0.0) || !(pf > 0.0 && pf < 1.0) {
        return Err(Error::InvalidArgument(format!("need eps > 0 and 0 < pf < 1 (got {eps}, {pf})")));
    }
    let allowed = eps / (2.0 * pair.lambda_b);
    if be_t.eps_bound > allowed {
        return Err(Error::EstimationPrecondition { eps_t: be_t.eps_bound, required: allowed });
    }
    let alpha_t = be_t.alpha;
    let gamma = eps / (16.0 * alpha_t * pair.lambda_b);
    // λ = √2 sin θ_a, so |dλ/dθ_a| ≤ √2.
    let eps_theta = gamma * FRAC_1_SQRT_2;
    let mut lambda_hat = [0.0; 2];
    let (mut shots, mut queries, mut rounds, mut max_power) = (0, 0, 0, 0);
    for (i, theta) in [0.0, -FRAC_PI_2].into_iter().enumerate() {
        let mut est = AmplitudeEstimator { circ: HadamardCircuit::new(be_t, pair, theta)? };
        let mut rng = gen::rng(gen::split_seed(seed, i as u64));
        let out = estimate_angle(&mut est, eps_theta, pf / 2.0, &mut rng);
        lambda_hat[i] = (core::f64::consts::SQRT_2 * libm::sin(out.theta)).clamp(0.0, 1.0);
        shots += out.shots;
        rounds += out.rounds;
        max_power = max_power.max(out.max_power);
        queries += out.charged;
    }
    let a = c(2.0 * lambda_hat[0] * lambda_hat[0] - 1.0, 2.0 * lambda_hat[1] * lambda_hat[1] - 1.0);
    Ok(EstimateReport {
        value: a * (alpha_t * pair.lambda_b),
        target_eps: eps,
        pf,
        shots,
        grover_queries: queries,
        rounds,
        max_power,
        lambda_hat,
        alpha_t,
        lambda_b: pair.lambda_b,
        budget: EstimateBudget { eps_t: be_t.eps_bound, eps_t_allowed: allowed, gamma, systematic_bound: pair.lambda_b * be_t.eps_bound },
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnergyReport {
    /// `ê_c = τ̂/(4V)`.
    pub energy: f64,
    pub energy_imag: f64,
    pub volume: f64,
    pub eps_c: f64,
    /// `None` when `B = 0` and the answer is exact.
    pub trace: Option<EstimateReport>,
}

/// Estimate of `E_c/V = Tr(BT)/(4V)` to `eps_c`, via a trace estimate at
/// `eps = 4Vε_c`.
pub fn estimate_energy(b: &CMat, be_t: &BlockEncoding, eps_c: f64, volume: f64, pf: f64, seed: u64) -> Result<EnergyReport> {
    if !(volume > 0.0) || !(eps_c > 0.0) {
        return Err(Error::InvalidArgument(format!("need V > 0 and eps_c > 0 (got {volume}, {eps_c})")));
    }
    if b.iter().all(|z| *z == ZERO) {
        return Ok(EnergyReport { energy: 0.0, energy_imag: 0.0, volume, eps_c, trace: None });
    }
    let pair = state_encodings(b)?;
    let rep = amplitude_estimate_trace(be_t, &pair, 4.0 * volume * eps_c, pf, seed)?;
    let e = rep.value / (4.0 * volume);
    Ok(EnergyReport { energy: e.re, energy_imag: e.im, volume, eps_c, trace: Some(rep) })
}

//! RPA and m-RPA matrices from molecular integrals, their Riccati form, and
//! correlation-energy references.
//!
//! Matrix elements are HF expectation values of double commutators,
//! evaluated by applying operators to determinant bitstrings.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::care::CareProblem;
use crate::error::{Error, Result};
use crate::linalg::{self, from_real, CMat};

pub mod fixtures;
pub mod fock;
pub mod integrals;

use fock::{apply_string_state, dot, single, Det, Hamiltonian, Ladder, State};
pub use integrals::{canonical, format_integrals, parse_integrals, parse_integrals_capped, IntegralSet, MAX_ORBITALS};

/// Largest excitation basis built by default.
pub const MAX_BASIS: usize = 400;

/// A rank-`α` excitation: holes and particles, each strictly ascending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Excitation {
    pub holes: Vec<usize>,
    pub particles: Vec<usize>,
}

impl Excitation {
    pub fn rank(&self) -> usize {
        self.holes.len()
    }

    /// `K†_μ = a†_{a1} ⋯ a†_{aα} a_{iα} ⋯ a_{i1}`.
    fn creation_string(&self) -> Vec<Ladder> {
        let mut ops: Vec<Ladder> = self.particles.iter().map(|&a| Ladder::Create(a)).collect();
        ops.extend(self.holes.iter().rev().map(|&i| Ladder::Annihilate(i)));
        ops
    }

    /// `K_μ = (K†_μ)†`.
    fn annihilation_string(&self) -> Vec<Ladder> {
        let mut ops: Vec<Ladder> = self.holes.iter().map(|&i| Ladder::Create(i)).collect();
        ops.extend(self.particles.iter().rev().map(|&a| Ladder::Annihilate(a)));
        ops
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExcitationBasis {
    pub m: usize,
    /// Ordered by rank, then holes, then particles.
    pub strings: Vec<Excitation>,
    /// `offsets[α−1]..offsets[α]` holds the rank-`α` strings.
    pub offsets: Vec<usize>,
}

impl ExcitationBasis {
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return alloc::vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `Σ_{α ≤ m} C(nOcc, α) C(nVirt, α)`.
pub fn basis_size(n_occ: usize, n_virt: usize, m: usize) -> usize {
    (1..=m).map(|a| binomial(n_occ, a) * binomial(n_virt, a)).sum()
}

pub fn excitation_basis(n_occ: usize, n_virt: usize, m: usize) -> ExcitationBasis {
    let occ: Vec<usize> = (0..n_occ).collect();
    let virt: Vec<usize> = (n_occ..n_occ + n_virt).collect();
    let mut strings = Vec::new();
    let mut offsets = alloc::vec![0];
    for a in 1..=m {
        for holes in combinations(&occ, a) {
            for particles in combinations(&virt, a) {
                strings.push(Excitation { holes: holes.clone(), particles });
            }
        }
        offsets.push(strings.len());
    }
    ExcitationBasis { m, strings, offsets }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RpaMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub m: usize,
    /// Rank offsets into the rows and columns, as in [`ExcitationBasis`].
    pub block_index: Vec<usize>,
    /// `max |G − I|` of the metric, when it was evaluated.
    pub metric_defect: Option<f64>,
}

impl RpaMatrices {
    /// Scalar one-pair instance.
    pub fn one_pair(a: f64, b: f64) -> Self {
        RpaMatrices {
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
            m: 1,
            block_index: alloc::vec![0, 1],
            metric_defect: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn range(&self, alpha: usize) -> (usize, usize) {
        (self.block_index[alpha - 1], self.block_index[alpha] - self.block_index[alpha - 1])
    }

    pub fn a_block(&self, alpha: usize, beta: usize) -> DMatrix<f64> {
        let (r0, nr) = self.range(alpha);
        let (c0, nc) = self.range(beta);
        self.a.view((r0, c0), (nr, nc)).into_owned()
    }

    pub fn b_block(&self, alpha: usize, beta: usize) -> DMatrix<f64> {
        let (r0, nr) = self.range(alpha);
        let (c0, nc) = self.range(beta);
        self.b.view((r0, c0), (nr, nc)).into_owned()
    }

    /// The rank-one (1p1h) part.
    pub fn one_p_one_h(&self) -> RpaMatrices {
        RpaMatrices {
            a: self.a_block(1, 1),
            b: self.b_block(1, 1),
            m: 1,
            block_index: alloc::vec![0, self.block_index[1]],
            metric_defect: self.metric_defect,
        }
    }

    pub fn structure(&self) -> StructureAudit {
        let mut audit = StructureAudit::default();
        for al in 1..=self.m {
            for be in 1..=self.m {
                let bmax = self.b_block(al, be).amax();
                let amax = self.a_block(al, be).amax();
                if (al, be) != (1, 1) {
                    audit.max_b_outside = audit.max_b_outside.max(bmax);
                }
                if al.abs_diff(be) > 2 {
                    audit.max_a_far = audit.max_a_far.max(amax);
                }
            }
        }
        audit.a_asymmetry = (&self.a - self.a.transpose()).amax();
        audit.b_asymmetry = (&self.b - self.b.transpose()).amax();
        audit.metric_defect = self.metric_defect;
        audit
    }
}

/// Largest entries where the quasi-boson structure predicts zeros.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StructureAudit {
    /// `max |B^{α,β}|` over `(α, β) ≠ (1, 1)`.
    pub max_b_outside: f64,
    /// `max |A^{α,β}|` over `|α − β| > 2`.
    pub max_a_far: f64,
    pub a_asymmetry: f64,
    pub b_asymmetry: f64,
    pub metric_defect: Option<f64>,
}

/// `A_{ia,jb} = (ε_a − ε_i) δ_ij δ_ab + ⟨ib‖aj⟩`, `B_{ia,jb} = ⟨ab‖ij⟩`,
/// pairs ordered by hole then particle.
pub fn build_rpa_m1(ints: &IntegralSet) -> RpaMatrices {
    let (no, nv) = (ints.n_occ, ints.n_virt);
    let n = no * nv;
    let e = &ints.orbital_energies;
    let idx = |k: usize| (k / nv, no + k % nv);
    let a = DMatrix::from_fn(n, n, |r, c| {
        let ((i, a), (j, b)) = (idx(r), idx(c));
        let d = if r == c { e[a] - e[i] } else { 0.0 };
        d + ints.v(i, b, a, j)
    });
    let b = DMatrix::from_fn(n, n, |r, c| {
        let ((i, a), (j, b)) = (idx(r), idx(c));
        ints.v(a, b, i, j)
    });
    RpaMatrices { a, b, m: 1, block_index: alloc::vec![0, n], metric_defect: None }
}

pub fn build_mrpa_matrices(ints: &IntegralSet, m: usize) -> Result<RpaMatrices> {
    build_mrpa_matrices_capped(ints, m, MAX_BASIS)
}

fn add(a: &State, b: &State, sb: f64) -> State {
    let mut out = a.clone();
    for (&d, &v) in b {
        *out.entry(d).or_insert(0.0) += sb * v;
    }
    out.retain(|_, v| *v != 0.0);
    out
}

/// An operator string with `S|HF⟩` and `H S|HF⟩` cached.
struct Cached {
    ops: Vec<Ladder>,
    on_hf: State,
    h_on_hf: State,
}

impl Cached {
    fn new(ops: Vec<Ladder>, hf: &State, ham: &Hamiltonian) -> Self {
        let on_hf = apply_string_state(&ops, hf);
        let h_on_hf = ham.apply(&on_hf);
        Cached { ops, on_hf, h_on_hf }
    }
}

/// `⟨HF|[X, [H, Y]]|HF⟩` from its four literal terms.
fn double_commutator(x: &Cached, y: &Cached, hf: &State, h_hf: &State) -> f64 {
    // ⟨HF| X H Y |HF⟩ − ⟨HF| X Y H |HF⟩ − ⟨HF| H Y X |HF⟩ + ⟨HF| Y H X |HF⟩
    let t1 = dot(hf, &apply_string_state(&x.ops, &y.h_on_hf));
    let t2 = dot(hf, &apply_string_state(&x.ops, &apply_string_state(&y.ops, h_hf)));
    let t3 = dot(h_hf, &apply_string_state(&y.ops, &x.on_hf));
    let t4 = dot(hf, &apply_string_state(&y.ops, &x.h_on_hf));
    (t1 - t2) - (t3 - t4)
}

/// `A_{μν} = ⟨HF|[K_μ, [H, K†_ν]]|HF⟩`, `B_{μν} = −⟨HF|[K_μ, [H, K_ν]]|HF⟩`
/// and the metric `⟨HF|[K_μ, K†_ν]|HF⟩`, over all strings up to rank `m`.
pub fn build_mrpa_matrices_capped(ints: &IntegralSet, m: usize, cap: usize) -> Result<RpaMatrices> {
    if m == 0 {
        return Err(Error::InvalidArgument("excitation rank must be at least 1".into()));
    }
    let nm = basis_size(ints.n_occ, ints.n_virt, m);
    if nm > cap {
        return Err(Error::OverCap { what: "excitation basis size", value: nm, cap });
    }
    let basis = excitation_basis(ints.n_occ, ints.n_virt, m);
    let ham = Hamiltonian::new(ints);
    let hf_det: Det = (1 << ints.n_occ) - 1;
    let hf = single(hf_det);
    let h_hf = ham.apply(&hf);
    let dag: Vec<Cached> = basis.strings.iter().map(|e| Cached::new(e.creation_string(), &hf, &ham)).collect();
    let ann: Vec<Cached> = basis.strings.iter().map(|e| Cached::new(e.annihilation_string(), &hf, &ham)).collect();

    let mut a = DMatrix::zeros(nm, nm);
    let mut b = DMatrix::zeros(nm, nm);
    let mut metric = 0.0f64;
    for mu in 0..nm {
        for nu in 0..nm {
            a[(mu, nu)] = double_commutator(&ann[mu], &dag[nu], &hf, &h_hf);
            b[(mu, nu)] = -double_commutator(&ann[mu], &ann[nu], &hf, &h_hf);
            let g = add(
                &apply_string_state(&ann[mu].ops, &dag[nu].on_hf),
                &apply_string_state(&dag[nu].ops, &ann[mu].on_hf),
                -1.0,
            );
            let gv = dot(&hf, &g);
            metric = metric.max((gv - if mu == nu { 1.0 } else { 0.0 }).abs());
        }
    }
    Ok(RpaMatrices { a, b, m, block_index: basis.offsets, metric_defect: Some(metric) })
}

/// `P = −A`, `Q = B`, `R = −B`, so that the Riccati equation
/// `TBT + TA + AᵀT + B = 0` is the CARE.
pub fn rpa_to_care(mats: &RpaMatrices) -> Result<CareProblem> {
    let a = from_real(&mats.a);
    let b = from_real(&mats.b);
    CareProblem::new(-a, b.clone(), -b)
}

/// `[[A, B], [−B, −A]]`.
pub fn rpa_matrix(mats: &RpaMatrices) -> CMat {
    let n = mats.dim();
    let mut h = CMat::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&from_real(&mats.a));
    h.view_mut((0, n), (n, n)).copy_from(&from_real(&mats.b));
    h.view_mut((n, 0), (n, n)).copy_from(&from_real(&(-&mats.b)));
    h.view_mut((n, n), (n, n)).copy_from(&from_real(&(-&mats.a)));
    h
}

fn instability_tol(h: &CMat) -> f64 {
    (1e-10 * linalg::norm2(h)).max(f64::MIN_POSITIVE)
}

/// Positive excitation energies `Ω`, ascending. Complex or non-positive
/// branches are reported as an instability.
pub fn excitation_energies(mats: &RpaMatrices) -> Result<Vec<f64>> {
    let h = rpa_matrix(mats);
    let tol = instability_tol(&h);
    let mut ev = linalg::eigenvalues(&h)?;
    if let Some(z) = ev.iter().find(|z| z.im.abs() > tol) {
        return Err(Error::RpaInstability { imag: z.im });
    }
    ev.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap_or(core::cmp::Ordering::Equal));
    let n = mats.dim();
    let mut omega: Vec<f64> = ev[..n].iter().map(|z| z.re).collect();
    if let Some(w) = omega.iter().find(|w| **w <= tol) {
        return Err(Error::RpaInstability { imag: *w });
    }
    omega.reverse();
    Ok(omega)
}

/// `¼ (Σ Ω − Tr A)`.
pub fn plasmon_energy(mats: &RpaMatrices) -> Result<f64> {
    let omega = excitation_energies(mats)?;
    Ok(0.25 * (omega.iter().sum::<f64>() - mats.a.trace()))
}

/// `T = Y X⁻¹` from a basis `[X; Y]` of the positive-branch invariant
/// subspace of `[[A, B], [−B, −A]]`.
pub fn plasmon_amplitudes(mats: &RpaMatrices) -> Result<DMatrix<f64>> {
    let h = rpa_matrix(mats);
    let n = mats.dim();
    let (q, _, k) = linalg::ordered_schur(&h, |z| z.re > 0.0)?;
    if k != n {
        return Err(Error::RpaInstability { imag: 0.0 });
    }
    let x = q.view((0, 0), (n, n)).into_owned();
    let y = q.view((n, 0), (n, n)).into_owned();
    let xi = linalg::inverse(&x)?;
    Ok(linalg::real_part(&(y * xi)))
}

/// `¼ Tr(B T)`.
pub fn correlation_energy(b: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<f64> {
    if b.shape() != t.shape() || b.nrows() != b.ncols() {
        return Err(Error::Dimension(format!("B is {:?}, T is {:?}", b.shape(), t.shape())));
    }
    Ok(0.25 * (b * t).trace())
}

/// `‖TBT + TA + AᵀT + B‖₂`.
pub fn riccati_residual_mrpa(a: &DMatrix<f64>, b: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    let r = t * b * t + t * a + a.transpose() * t + b;
    linalg::norm2(&from_real(&r))
}

/// Stabilizing scalar root `t = (−A + √(A² − B²))/B`, zero when `B = 0`.
pub fn one_pair_amplitude(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    // Rationalized to avoid cancellation: (√(A²−B²) − A)/B = −B/(A + √(A²−B²)).
    -b / (a + libm::sqrt(a * a - b * b))
}

#[cfg(test)]
mod tests;

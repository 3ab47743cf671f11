//! Occupation-number states and second-quantized operators on them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::integrals::IntegralSet;

/// Bit `p` set means spin orbital `p` is occupied.
pub type Det = u32;

/// Sparse real state over determinants.
pub type State = BTreeMap<Det, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Sign and result of one ladder operator on a determinant.
pub fn ladder(op: Ladder, d: Det) -> Option<(Det, f64)> {
    let (p, occupied_after) = match op {
        Ladder::Create(p) => (p, true),
        Ladder::Annihilate(p) => (p, false),
    };
    let bit = 1 << p;
    if (d & bit != 0) == occupied_after {
        return None;
    }
    let below = (d & (bit - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((d ^ bit, sign))
}

/// Applies `ops` right to left, as they would be written in a product.
pub fn apply_string(ops: &[Ladder], d: Det) -> Option<(Det, f64)> {
    let mut cur = d;
    let mut sign = 1.0;
    for &op in ops.iter().rev() {
        let (nd, s) = ladder(op, cur)?;
        cur = nd;
        sign *= s;
    }
    Some((cur, sign))
}

pub fn apply_string_state(ops: &[Ladder], psi: &State) -> State {
    let mut out = State::new();
    for (&d, &a) in psi {
        if let Some((nd, s)) = apply_string(ops, d) {
            *out.entry(nd).or_insert(0.0) += s * a;
        }
    }
    out.retain(|_, v| *v != 0.0);
    out
}

pub fn dot(a: &State, b: &State) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter_map(|(d, x)| large.get(d).map(|y| x * y)).sum()
}

pub fn single(d: Det) -> State {
    let mut s = State::new();
    s.insert(d, 1.0);
    s
}

/// Dense integral tables for fast Hamiltonian application.
pub struct Hamiltonian {
    n: usize,
    h: Vec<f64>,
    v: Vec<f64>,
}

impl Hamiltonian {
    /// `H = Σ h_pq a†_p a_q + ¼ Σ ⟨pq‖rs⟩ a†_p a†_q a_s a_r`.
    pub fn new(ints: &IntegralSet) -> Self {
        let n = ints.n_orb();
        let mut h = alloc::vec![0.0; n * n];
        let mut v = alloc::vec![0.0; n * n * n * n];
        for p in 0..n {
            for q in 0..n {
                h[p * n + q] = ints.h(p, q);
                for r in 0..n {
                    for s in 0..n {
                        v[((p * n + q) * n + r) * n + s] = ints.v(p, q, r, s);
                    }
                }
            }
        }
        Hamiltonian { n, h, v }
    }

    fn v(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.v[((p * self.n + q) * self.n + r) * self.n + s]
    }

    /// `H|d⟩`, using the restricted sums over `p < q`, `r < s`.
    pub fn apply_det(&self, d: Det, amp: f64, out: &mut State) {
        let n = self.n;
        let occ: Vec<usize> = (0..n).filter(|&p| d & (1 << p) != 0).collect();
        for &q in &occ {
            for p in 0..n {
                let h = self.h[p * n + q];
                if h == 0.0 {
                    continue;
                }
                if let Some((nd, s)) = apply_string(&[Ladder::Create(p), Ladder::Annihilate(q)], d) {
                    *out.entry(nd).or_insert(0.0) += amp * h * s;
                }
            }
        }
        for (ri, &r) in occ.iter().enumerate() {
            for &s in &occ[ri + 1..] {
                for p in 0..n {
                    for q in p + 1..n {
                        let v = self.v(p, q, r, s);
                        if v == 0.0 {
                            continue;
                        }
                        let ops = [Ladder::Create(p), Ladder::Create(q), Ladder::Annihilate(s), Ladder::Annihilate(r)];
                        if let Some((nd, sg)) = apply_string(&ops, d) {
                            *out.entry(nd).or_insert(0.0) += amp * v * sg;
                        }
                    }
                }
            }
        }
    }

    pub fn apply(&self, psi: &State) -> State {
        let mut out = State::new();
        for (&d, &a) in psi {
            self.apply_det(d, a, &mut out);
        }
        out.retain(|_, v| *v != 0.0);
        out
    }
}

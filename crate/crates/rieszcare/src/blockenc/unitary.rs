//! Unitaries kept in factored form so that wide LCUs stay cheap to apply.
//!
//! Register order is ancilla-major: basis index `k·d + j` puts the outer
//! register value `k` in front of an inner index `j`.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::linalg::{self, CMat, CVec, C64, ZERO};

/// Dense materialization is only attempted up to this dimension.
pub const DENSE_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum Unitary {
    Identity(usize),
    Dense(CMat),
    /// Global phase times an inner unitary.
    Phased(C64, Box<Unitary>),
    /// `(PREP† ⊗ I) · SELECT · (PREP ⊗ I)`. PREP is the Householder
    /// reflection sending `|0⟩` to the real unit vector `prep`, SELECT
    /// applies `terms[k]` on the inner register when the outer one is `k`.
    Lcu { prep: Vec<f64>, terms: Vec<Unitary> },
    /// `inner · (I ⊗ X ⊗ I_n)`: swaps the halves of each consecutive
    /// `2n`-block of the input index.
    RightSwap { inner: Box<Unitary>, n: usize },
}

impl Unitary {
    pub fn dim(&self) -> usize {
        match self {
            Unitary::Identity(d) => *d,
            Unitary::Dense(m) => m.nrows(),
            Unitary::Phased(_, u) => u.dim(),
            Unitary::Lcu { prep, terms } => prep.len() * terms.first().map_or(0, |t| t.dim()),
            Unitary::RightSwap { inner, .. } => inner.dim(),
        }
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        match self {
            Unitary::Identity(_) => v.clone(),
            Unitary::Dense(m) => m * v,
            Unitary::Phased(ph, u) => u.apply(v) * *ph,
            Unitary::RightSwap { inner, n } => {
                let w = CVec::from_fn(v.len(), |i, _| v[swap_index(i, *n)]);
                inner.apply(&w)
            }
            Unitary::Lcu { prep, terms } => {
                let d = terms[0].dim();
                let mut w = v.clone();
                householder(prep, d, &mut w);
                let mut out = CVec::zeros(v.len());
                for (k, t) in terms.iter().enumerate() {
                    let seg = CVec::from_column_slice(&w.as_slice()[k * d..(k + 1) * d]);
                    let r = t.apply(&seg);
                    out.rows_mut(k * d, d).copy_from(&r);
                }
                householder(prep, d, &mut out);
                out
            }
        }
    }

    /// Rows `0..rows` of the columns listed in `cols`.
    pub fn sub(&self, rows: usize, cols: &[usize]) -> CMat {
        match self {
            Unitary::Identity(_) => CMat::from_fn(rows, cols.len(), |i, j| if i == cols[j] { linalg::ONE } else { ZERO }),
            Unitary::Dense(m) => CMat::from_fn(rows, cols.len(), |i, j| m[(i, cols[j])]),
            Unitary::Phased(ph, u) => u.sub(rows, cols) * *ph,
            Unitary::RightSwap { inner, n } => {
                let mapped: Vec<usize> = cols.iter().map(|&j| swap_index(j, *n)).collect();
                inner.sub(rows, &mapped)
            }
            Unitary::Lcu { prep, terms } => {
                let d = terms[0].dim();
                if rows <= d && cols.iter().all(|&j| j < d) {
                    let parts: Vec<CMat> = terms
                        .iter()
                        .zip(prep)
                        .filter(|(_, p)| **p != 0.0)
                        .map(|(t, p)| t.sub(rows, cols) * C64::new(p * p, 0.0))
                        .collect();
                    linalg::tree_sum(parts).unwrap_or_else(|| CMat::zeros(rows, cols.len()))
                } else {
                    self.sub_by_apply(rows, cols)
                }
            }
        }
    }

    fn sub_by_apply(&self, rows: usize, cols: &[usize]) -> CMat {
        let d = self.dim();
        let mut out = CMat::zeros(rows, cols.len());
        for (jj, &j) in cols.iter().enumerate() {
            let mut e = CVec::zeros(d);
            e[j] = linalg::ONE;
            let col = self.apply(&e);
            out.column_mut(jj).copy_from(&col.rows(0, rows));
        }
        out
    }

    /// Top-left `rows × cols` corner.
    pub fn top_left(&self, rows: usize, cols: usize) -> CMat {
        let idx: Vec<usize> = (0..cols).collect();
        self.sub(rows, &idx)
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Unitary::Dense(m) => m.clone(),
            _ => self.top_left(self.dim(), self.dim()),
        }
    }

    /// `‖U†U − I‖₂`, exact up to [`DENSE_LIMIT`]. Larger factored unitaries
    /// report the structural bound: worst factor defect plus the deviation
    /// of `‖prep‖` from one.
    pub fn unitarity_defect(&self) -> f64 {
        if self.dim() <= DENSE_LIMIT {
            return linalg::unitarity_defect(&self.to_dense());
        }
        match self {
            Unitary::Identity(_) => 0.0,
            Unitary::Dense(m) => linalg::unitarity_defect(m),
            Unitary::Phased(ph, u) => u.unitarity_defect() + (ph.norm() - 1.0).abs(),
            Unitary::RightSwap { inner, .. } => inner.unitarity_defect(),
            Unitary::Lcu { prep, terms } => {
                let pn = libm::sqrt(prep.iter().map(|p| p * p).sum::<f64>());
                let worst = terms.iter().map(|t| t.unitarity_defect()).fold(0.0, f64::max);
                worst + 2.0 * (pn - 1.0).abs()
            }
        }
    }
}

fn swap_index(i: usize, n: usize) -> usize {
    let b = (i / n) % 2;
    if b == 0 {
        i + n
    } else {
        i - n
    }
}

/// Apply the Householder reflection `|0⟩ ↦ prep` on the outer register.
fn householder(prep: &[f64], d: usize, v: &mut CVec) {
    let k = prep.len();
    let u0 = 1.0 - prep[0];
    let uu = u0 * u0 + prep[1..].iter().map(|p| p * p).sum::<f64>();
    if uu <= 0.0 {
        return;
    }
    for j in 0..d {
        let mut dot = v[j] * u0;
        for kk in 1..k {
            dot -= v[kk * d + j] * prep[kk];
        }
        let f = dot * (2.0 / uu);
        v[j] -= f * u0;
        for kk in 1..k {
            v[kk * d + j] += f * prep[kk];
        }
    }
}

//! Real spin-orbital integrals and their plain-text format.
//!
//! ```text
//! nOcc nVirt
//! eps_0
//! ...
//! 1B p q value
//! 2B p q r s value
//! ```
//! Indices are 0-based with occupied orbitals first. Blank lines and lines
//! starting with `#` are ignored. Energies may share lines.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

/// Largest orbital count accepted by default.
pub const MAX_ORBITALS: usize = 12;
/// Relative tolerance for symmetry-related records that disagree.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct IntegralSet {
    pub n_occ: usize,
    pub n_virt: usize,
    pub orbital_energies: Vec<f64>,
    /// `h_pq` keyed by `(min, max)`.
    pub one_body: BTreeMap<(usize, usize), f64>,
    /// `⟨pq‖rs⟩` keyed by its canonical representative, see [`canonical`].
    pub two_body: BTreeMap<[usize; 4], f64>,
}

/// Canonical key and sign of `⟨pq‖rs⟩`: both pairs ascending, the smaller
/// pair first. `None` when the element vanishes by antisymmetry.
pub fn canonical(p: usize, q: usize, r: usize, s: usize) -> Option<([usize; 4], f64)> {
    if p == q || r == s {
        return None;
    }
    let mut sign = 1.0;
    let (p, q) = if p < q { (p, q) } else { sign = -sign; (q, p) };
    let (r, s) = if r < s { (r, s) } else { sign = -sign; (s, r) };
    let key = if (p, q) <= (r, s) { [p, q, r, s] } else { [r, s, p, q] };
    Some((key, sign))
}

impl IntegralSet {
    pub fn new(n_occ: usize, n_virt: usize, orbital_energies: Vec<f64>) -> Result<Self> {
        Self::with_cap(n_occ, n_virt, orbital_energies, MAX_ORBITALS)
    }

    pub fn with_cap(n_occ: usize, n_virt: usize, orbital_energies: Vec<f64>, cap: usize) -> Result<Self> {
        if n_occ == 0 || n_virt == 0 {
            return Err(Error::InvalidArgument("nOcc and nVirt must be positive".into()));
        }
        if n_occ + n_virt > cap {
            return Err(Error::OverCap { what: "orbital count", value: n_occ + n_virt, cap });
        }
        if orbital_energies.len() != n_occ + n_virt {
            return Err(Error::Dimension(format!("{} orbital energies for {} orbitals", orbital_energies.len(), n_occ + n_virt)));
        }
        Ok(IntegralSet { n_occ, n_virt, orbital_energies, one_body: BTreeMap::new(), two_body: BTreeMap::new() })
    }

    pub fn n_orb(&self) -> usize {
        self.n_occ + self.n_virt
    }

    fn check_index(&self, idx: &[usize]) -> Result<()> {
        match idx.iter().find(|&&p| p >= self.n_orb()) {
            Some(p) => Err(Error::InvalidArgument(format!("orbital index {p} out of range 0..{}", self.n_orb()))),
            None => Ok(()),
        }
    }

    /// Stores `h_pq`; a conflicting value for `h_qp` is a symmetry violation.
    pub fn set_one_body(&mut self, p: usize, q: usize, v: f64) -> Result<()> {
        self.check_index(&[p, q])?;
        let key = (p.min(q), p.max(q));
        if let Some(old) = self.one_body.get(&key) {
            if !agree(*old, v) {
                return Err(Error::InvalidArgument(format!("h[{p},{q}] = {v} conflicts with h[{q},{p}] = {old}")));
            }
        }
        self.one_body.insert(key, v);
        Ok(())
    }

    /// Stores `⟨pq‖rs⟩` through its canonical representative.
    pub fn set_two_body(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) -> Result<()> {
        self.check_index(&[p, q, r, s])?;
        let Some((key, sign)) = canonical(p, q, r, s) else {
            if v != 0.0 {
                return Err(Error::InvalidArgument(format!("<{p}{q}||{r}{s}> = {v} must vanish by antisymmetry")));
            }
            return Ok(());
        };
        let val = sign * v;
        if let Some(old) = self.two_body.get(&key) {
            if !agree(*old, val) {
                return Err(Error::InvalidArgument(format!(
                    "<{p}{q}||{r}{s}> = {v} conflicts with the stored {:?} = {old}",
                    key
                )));
            }
        }
        self.two_body.insert(key, val);
        Ok(())
    }

    /// `h_pq`. Without any one-body records this is the completion
    /// `ε_p δ_pq − Σ_i ⟨pi‖qi⟩` that makes the orbitals canonical.
    pub fn h(&self, p: usize, q: usize) -> f64 {
        if self.one_body.is_empty() {
            let diag = if p == q { self.orbital_energies[p] } else { 0.0 };
            return diag - (0..self.n_occ).map(|i| self.v(p, i, q, i)).sum::<f64>();
        }
        self.one_body.get(&(p.min(q), p.max(q))).copied().unwrap_or(0.0)
    }

    /// Antisymmetrized `⟨pq‖rs⟩`.
    pub fn v(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        match canonical(p, q, r, s) {
            Some((key, sign)) => sign * self.two_body.get(&key).copied().unwrap_or(0.0),
            None => 0.0,
        }
    }

    /// Copy with two-body elements below `cutoff` in magnitude removed.
    pub fn thresholded(&self, cutoff: f64) -> IntegralSet {
        let mut out = self.clone();
        out.two_body.retain(|_, v| v.abs() >= cutoff);
        out
    }
}

fn agree(a: f64, b: f64) -> bool {
    (a - b).abs() <= SYMMETRY_TOL * (1.0 + a.abs().max(b.abs()))
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: core::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| perr(line, format!("cannot parse {tok:?}")))
}

pub fn parse_integrals(text: &str) -> Result<IntegralSet> {
    parse_integrals_capped(text, MAX_ORBITALS)
}

pub fn parse_integrals_capped(text: &str, cap: usize) -> Result<IntegralSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty input"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(perr(hl, "header must be \"nOcc nVirt\""));
    }
    let (n_occ, n_virt): (usize, usize) = (num(toks[0], hl)?, num(toks[1], hl)?);
    if n_occ + n_virt > cap {
        return Err(Error::OverCap { what: "orbital count", value: n_occ + n_virt, cap });
    }
    let n = n_occ + n_virt;
    let mut energies = Vec::with_capacity(n);
    let mut last = hl;
    while energies.len() < n {
        let (ln, l) = lines.next().ok_or_else(|| perr(last, format!("expected {n} orbital energies, found {}", energies.len())))?;
        last = ln;
        for t in l.split_whitespace() {
            if energies.len() == n {
                return Err(perr(ln, "too many orbital energies"));
            }
            energies.push(num::<f64>(t, ln)?);
        }
    }
    let mut set = IntegralSet::with_cap(n_occ, n_virt, energies, cap).map_err(|e| perr(hl, format!("{e}")))?;
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        let res = match toks.first().copied() {
            Some("1B") if toks.len() == 4 => set.set_one_body(num(toks[1], ln)?, num(toks[2], ln)?, num(toks[3], ln)?),
            Some("2B") if toks.len() == 6 => {
                set.set_two_body(num(toks[1], ln)?, num(toks[2], ln)?, num(toks[3], ln)?, num(toks[4], ln)?, num(toks[5], ln)?)
            }
            _ => return Err(perr(ln, format!("malformed record {l:?}"))),
        };
        res.map_err(|e| perr(ln, format!("{e}")))?;
    }
    Ok(set)
}

/// Writes canonical records only; values use the shortest round-trip form.
pub fn format_integrals(set: &IntegralSet) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} {}", set.n_occ, set.n_virt);
    for e in &set.orbital_energies {
        let _ = writeln!(s, "{e:?}");
    }
    for ((p, q), v) in &set.one_body {
        let _ = writeln!(s, "1B {p} {q} {v:?}");
    }
    for ([p, q, r, t], v) in &set.two_body {
        let _ = writeln!(s, "2B {p} {q} {r} {t} {v:?}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let s = parse_integrals("1 1\n-0.5 0.5\n").unwrap();
        assert_eq!((s.n_occ, s.n_virt), (1, 1));
        assert!(s.two_body.is_empty());
        assert_eq!(s.h(0, 0), -0.5);
    }

    #[test]
    fn antisymmetry_completion() {
        let s = parse_integrals("1 1\n-0.5\n0.5\n2B 0 1 0 1 0.1\n").unwrap();
        assert_eq!(s.v(1, 0, 0, 1), -0.1);
        assert_eq!(s.v(0, 1, 1, 0), -0.1);
        assert_eq!(s.v(1, 0, 1, 0), 0.1);
        assert_eq!(s.v(0, 0, 1, 1), 0.0);
    }

    #[test]
    fn pair_swap_symmetry() {
        let mut s = IntegralSet::new(2, 2, alloc::vec![-1.0, -0.8, 0.3, 0.6]).unwrap();
        s.set_two_body(2, 3, 0, 1, 0.25).unwrap();
        assert_eq!(s.v(0, 1, 2, 3), 0.25);
        assert_eq!(s.v(1, 0, 2, 3), -0.25);
        assert_eq!(s.v(3, 2, 1, 0), 0.25);
        assert!(s.set_two_body(1, 0, 2, 3, 0.25).is_err());
        assert!(s.set_two_body(1, 0, 2, 3, -0.25).is_ok());
    }

    #[test]
    fn round_trip() {
        let mut s = IntegralSet::new(2, 1, alloc::vec![-1.25, -0.5, 0.75]).unwrap();
        s.set_one_body(0, 2, 0.1).unwrap();
        s.set_one_body(1, 1, -0.3333333333333333).unwrap();
        s.set_two_body(0, 2, 1, 2, 0.012345678901234567).unwrap();
        s.set_two_body(2, 1, 0, 1, -1e-9).unwrap();
        let back = parse_integrals(&format_integrals(&s)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_integrals("1 1\n-0.5 x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_integrals("1 1\n-0.5 0.5\n3B 0 0 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_integrals("1 1\n-0.5 0.5\n2B 0 0 1 1 0.3\n").is_err());
        assert!(parse_integrals("1 1\n-0.5 0.5\n2B 0 1 0 1 0.3\n2B 1 0 1 0 0.4\n").is_err());
        assert!(parse_integrals("1 1\n-0.5 0.5\n1B 0 1 0.3\n1B 1 0 0.31\n").is_err());
        assert!(parse_integrals("1 1\n-0.5 0.5\n2B 0 1 0 5 0.3\n").is_err());
        assert!(matches!(parse_integrals("7 6\n"), Err(Error::OverCap { .. })));
        assert!(parse_integrals("1 1\n-0.5\n").is_err());
    }

    #[test]
    fn completion_gives_canonical_fock() {
        let mut s = IntegralSet::new(2, 2, alloc::vec![-1.0, -0.7, 0.4, 0.9]).unwrap();
        s.set_two_body(0, 2, 1, 2, 0.07).unwrap();
        s.set_two_body(0, 1, 0, 1, 0.3).unwrap();
        for p in 0..4 {
            for q in 0..4 {
                let f = s.h(p, q) + (0..2).map(|i| s.v(p, i, q, i)).sum::<f64>();
                let want = if p == q { s.orbital_energies[p] } else { 0.0 };
                assert!((f - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn threshold_drops_small_elements() {
        let mut s = IntegralSet::new(1, 1, alloc::vec![-0.5, 0.5]).unwrap();
        s.set_two_body(0, 1, 0, 1, 1e-6).unwrap();
        assert!(s.thresholded(1e-5).two_body.is_empty());
        assert_eq!(s.thresholded(1e-7).two_body.len(), 1);
    }
}

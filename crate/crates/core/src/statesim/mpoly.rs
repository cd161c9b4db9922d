//! Multivariate polynomials over F_q in register variables.
//!
//! Polynomials are treated as functions on F_q^n, so variable exponents are
//! reduced with `x^q = x`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use smallvec::SmallVec;

use super::RegId;
use crate::field::{FieldElement, FieldParams};

/// Sorted by register, exponents positive.
pub type Monomial = SmallVec<[(RegId, u64); 4]>;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MPoly {
    terms: BTreeMap<Monomial, FieldElement>,
}

fn reduce_exp(e: u64, q: u64) -> u64 {
    if e == 0 {
        0
    } else {
        (e - 1) % (q - 1) + 1
    }
}

fn mono_mul(a: &Monomial, b: &Monomial, q: u64) -> Monomial {
    let mut out = Monomial::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push(b[j]);
            j += 1;
        } else {
            out.push((a[i].0, reduce_exp(a[i].1 + b[j].1, q)));
            i += 1;
            j += 1;
        }
    }
    out
}

impl MPoly {
    pub fn zero() -> Self {
        MPoly::default()
    }

    pub fn constant(c: FieldElement) -> Self {
        let mut p = MPoly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::new(), c);
        }
        p
    }

    pub fn var(r: RegId) -> Self {
        Self::term(FieldElement::ONE, r, 1)
    }

    /// `c·r^e`.
    pub fn term(c: FieldElement, r: RegId, e: u64) -> Self {
        let mut p = MPoly::zero();
        if !c.is_zero() {
            let mut m = Monomial::new();
            if e > 0 {
                m.push((r, e));
            }
            p.terms.insert(m, c);
        }
        p
    }

    /// `Σ_k c_k r^k` from a univariate coefficient list.
    pub fn univariate(coeffs: &[FieldElement], r: RegId) -> Self {
        let mut p = MPoly::zero();
        for (k, &c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                let mut m = Monomial::new();
                if k > 0 {
                    m.push((r, k as u64));
                }
                p.terms.insert(m, c);
            }
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &FieldElement)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, k: &FieldParams, m: Monomial, c: FieldElement) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = k.add(*o.get(), c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, k: &FieldParams, o: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, &c) in &o.terms {
            out.add_term(k, m.clone(), c);
        }
        out
    }

    pub fn sub(&self, k: &FieldParams, o: &MPoly) -> MPoly {
        let mut out = self.clone();
        for (m, &c) in &o.terms {
            out.add_term(k, m.clone(), k.neg(c));
        }
        out
    }

    pub fn scale(&self, k: &FieldParams, c: FieldElement) -> MPoly {
        if c.is_zero() {
            return MPoly::zero();
        }
        MPoly { terms: self.terms.iter().map(|(m, &a)| (m.clone(), k.mul(a, c))).collect() }
    }

    pub fn mul(&self, k: &FieldParams, o: &MPoly) -> MPoly {
        let mut out = MPoly::zero();
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &o.terms {
                out.add_term(k, mono_mul(ma, mb, k.q()), k.mul(ca, cb));
            }
        }
        out
    }

    pub fn pow(&self, k: &FieldParams, mut e: u64) -> MPoly {
        if let Some((m, &c)) = self.single_term() {
            let m: Monomial = m
                .iter()
                .map(|&(r, x)| (r, reduce_exp(x * e, k.q())))
                .filter(|&(_, x)| x > 0)
                .collect();
            let mut out = MPoly::zero();
            out.add_term(k, m, k.pow(c, e));
            return out;
        }
        let mut base = self.clone();
        let mut r = MPoly::constant(FieldElement::ONE);
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(k, &base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(k, &base);
            }
        }
        r
    }

    fn single_term(&self) -> Option<(&Monomial, &FieldElement)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    /// Replace the variable `r` by the polynomial `rep`.
    pub fn substitute(&self, k: &FieldParams, r: RegId, rep: &MPoly) -> MPoly {
        let mut powers: BTreeMap<u64, MPoly> = BTreeMap::new();
        let mut out = MPoly::zero();
        for (m, &c) in &self.terms {
            let Some(pos) = m.iter().position(|&(v, _)| v == r) else {
                out.add_term(k, m.clone(), c);
                continue;
            };
            let e = m[pos].1;
            let mut rest = m.clone();
            rest.remove(pos);
            let pw = powers.entry(e).or_insert_with(|| rep.pow(k, e));
            for (pm, &pc) in &pw.terms {
                out.add_term(k, mono_mul(&rest, pm, k.q()), k.mul(c, pc));
            }
        }
        out
    }

    pub fn partial_eval(&self, k: &FieldParams, r: RegId, val: FieldElement) -> MPoly {
        let mut out = MPoly::zero();
        for (m, &c) in &self.terms {
            match m.iter().position(|&(v, _)| v == r) {
                None => out.add_term(k, m.clone(), c),
                Some(pos) => {
                    let mut rest = m.clone();
                    let e = rest.remove(pos).1;
                    out.add_term(k, rest, k.mul(c, k.pow(val, e)));
                }
            }
        }
        out
    }

    pub fn eval(&self, k: &FieldParams, val: impl Fn(RegId) -> FieldElement) -> FieldElement {
        let mut acc = FieldElement::ZERO;
        for (m, &c) in &self.terms {
            let mut t = c;
            for &(r, e) in m {
                t = k.mul(t, k.pow(val(r), e));
            }
            acc = k.add(acc, t);
        }
        acc
    }

    pub fn vars(&self) -> BTreeSet<RegId> {
        self.terms.keys().flat_map(|m| m.iter().map(|&(r, _)| r)).collect()
    }

    pub fn mentions(&self, r: RegId) -> bool {
        self.terms.keys().any(|m| m.iter().any(|&(v, _)| v == r))
    }

    pub fn degree_in(&self, r: RegId) -> u64 {
        self.terms
            .keys()
            .flat_map(|m| m.iter().filter(|&&(v, _)| v == r).map(|&(_, e)| e))
            .max()
            .unwrap_or(0)
    }

    pub fn total_degree(&self) -> u64 {
        self.terms.keys().map(|m| m.iter().map(|&(_, e)| e).sum()).max().unwrap_or(0)
    }

    /// Write `self = c·r + rest` with `c`, `rest` free of `r`; `None` if `r`
    /// occurs with a higher power.
    pub fn split_linear(&self, r: RegId) -> Option<(MPoly, MPoly)> {
        let mut c = MPoly::zero();
        let mut rest = MPoly::zero();
        for (m, &a) in &self.terms {
            match m.iter().position(|&(v, _)| v == r) {
                None => {
                    rest.terms.insert(m.clone(), a);
                }
                Some(pos) if m[pos].1 == 1 => {
                    let mut mm = m.clone();
                    mm.remove(pos);
                    c.terms.insert(mm, a);
                }
                Some(_) => return None,
            }
        }
        Some((c, rest))
    }

    pub fn constant_term(&self) -> FieldElement {
        self.terms.get(&Monomial::new()).copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn without_constant(&self) -> MPoly {
        let mut out = self.clone();
        out.terms.remove(&Monomial::new());
        out
    }

    /// Coefficient of exactly `r^e` (no other variables).
    pub fn coeff_of_power(&self, r: RegId, e: u64) -> FieldElement {
        let mut m = Monomial::new();
        if e > 0 {
            m.push((r, e));
        }
        self.terms.get(&m).copied().unwrap_or(FieldElement::ZERO)
    }

    /// Canonical text: terms in monomial order, `c*rN^e` joined by ` + `.
    pub fn format(&self, k: &FieldParams) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (i, (m, &c)) in self.terms.iter().enumerate() {
            if i > 0 {
                s.push_str(" + ");
            }
            s.push_str(&k.format(c));
            for &(r, e) in m {
                if e == 1 {
                    let _ = write!(s, "*r{}", r.0);
                } else {
                    let _ = write!(s, "*r{}^{}", r.0, e);
                }
            }
        }
        s
    }
}

//! Univariate polynomials over F_q and root extraction.

use super::{FieldElement, FieldParams};
use crate::rng::RngStream;

/// Exhaustive evaluation is used for root finding up to this field order when
/// random splitting stalls.
const EXHAUSTIVE_MAX: u64 = 4096;
const SPLIT_ATTEMPTS: usize = 256;

/// Coefficients constant term first, no trailing zeros. The zero polynomial
/// is the empty vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct UniPoly {
    coeffs: Vec<FieldElement>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: FieldElement) -> Self {
        Self::new(vec![c])
    }

    /// `c·x^k`.
    pub fn monomial(c: FieldElement, k: usize) -> Self {
        let mut v = vec![FieldElement::ZERO; k + 1];
        v[k] = c;
        Self::new(v)
    }

    /// From integers reduced into the prime subfield.
    pub fn from_ints(field: &FieldParams, c: &[i64]) -> Self {
        Self::new(c.iter().map(|&n| field.from_int(n)).collect())
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero past the end.
    pub fn coeff(&self, k: usize) -> FieldElement {
        self.coeffs.get(k).copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn lead(&self) -> FieldElement {
        self.coeffs.last().copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn eval(&self, k: &FieldParams, x: FieldElement) -> FieldElement {
        self.coeffs.iter().rev().fold(FieldElement::ZERO, |acc, &c| k.add(k.mul(acc, x), c))
    }

    pub fn add(&self, k: &FieldParams, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|i| k.add(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn sub(&self, k: &FieldParams, o: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|i| k.sub(self.coeff(i), o.coeff(i))).collect())
    }

    pub fn scale(&self, k: &FieldParams, c: FieldElement) -> UniPoly {
        Self::new(self.coeffs.iter().map(|&a| k.mul(a, c)).collect())
    }

    pub fn mul(&self, k: &FieldParams, o: &UniPoly) -> UniPoly {
        if self.is_zero() || o.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![FieldElement::ZERO; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in o.coeffs.iter().enumerate() {
                out[i + j] = k.add(out[i + j], k.mul(a, b));
            }
        }
        Self::new(out)
    }

    /// Quotient and remainder. Panics on division by the zero polynomial.
    pub fn div_rem(&self, k: &FieldParams, d: &UniPoly) -> (UniPoly, UniPoly) {
        let dd = d.degree().expect("polynomial division by zero");
        let inv = k.inv(d.lead()).expect("nonzero leading coefficient");
        let mut r = self.coeffs.clone();
        if r.len() <= dd {
            return (UniPoly::zero(), self.clone());
        }
        let mut quo = vec![FieldElement::ZERO; r.len() - dd];
        for top in (dd..r.len()).rev() {
            let c = k.mul(r[top], inv);
            if c.is_zero() {
                continue;
            }
            quo[top - dd] = c;
            for (i, &dc) in d.coeffs.iter().enumerate() {
                let idx = top - dd + i;
                r[idx] = k.sub(r[idx], k.mul(c, dc));
            }
        }
        r.truncate(dd);
        (Self::new(quo), Self::new(r))
    }

    pub fn rem(&self, k: &FieldParams, d: &UniPoly) -> UniPoly {
        self.div_rem(k, d).1
    }

    pub fn monic(&self, k: &FieldParams) -> UniPoly {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(k, k.inv(self.lead()).expect("nonzero leading coefficient"))
    }

    /// Monic gcd; zero only if both inputs are zero.
    pub fn gcd(&self, k: &FieldParams, o: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(k, &b);
            a = b;
            b = r;
        }
        a.monic(k)
    }

    /// `self^e mod m`.
    pub fn pow_mod(&self, k: &FieldParams, mut e: u64, m: &UniPoly) -> UniPoly {
        let mut base = self.rem(k, m);
        let mut r = UniPoly::constant(FieldElement::ONE).rem(k, m);
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(k, &base).rem(k, m);
            }
            base = base.mul(k, &base).rem(k, m);
            e >>= 1;
        }
        r
    }

    pub fn format(&self, k: &FieldParams) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(|&c| k.format(c)).collect();
        format!("[{}]", parts.join(","))
    }
}

fn x_poly() -> UniPoly {
    UniPoly::new(vec![FieldElement::ZERO, FieldElement::ONE])
}

/// The roots of `g(y) − z` in F_q, sorted canonically.
///
/// Distinct-root extraction via `gcd(h, y^q − y)` followed by equal-degree
/// splitting with seeded randomness; the result does not depend on the seed.
pub fn find_roots(k: &FieldParams, g: &UniPoly, z: FieldElement) -> Vec<FieldElement> {
    let h = g.sub(k, &UniPoly::constant(z));
    match h.degree() {
        None => return k.elements().collect(),
        Some(0) => return Vec::new(),
        _ => {}
    }
    let h = h.monic(k);
    let xq = x_poly().pow_mod(k, k.q(), &h);
    let split = h.gcd(k, &xq.sub(k, &x_poly()));
    let mut roots = Vec::new();
    let mut rng = RngStream::seed_from(0x005e_ed0f_2007);
    if !split_linear(k, &split, &mut rng, &mut roots) {
        assert!(k.q() <= EXHAUSTIVE_MAX, "root splitting stalled over a large field");
        roots = k.elements().filter(|&y| g.eval(k, y) == z).collect();
    }
    roots.sort_by(|&a, &b| k.canonical_cmp(a, b));
    roots
}

/// Split a monic product of distinct linear factors into its roots.
fn split_linear(k: &FieldParams, f: &UniPoly, rng: &mut RngStream, out: &mut Vec<FieldElement>) -> bool {
    match f.degree() {
        None | Some(0) => return true,
        Some(1) => {
            out.push(k.neg(f.coeff(0)));
            return true;
        }
        _ => {}
    }
    for _ in 0..SPLIT_ATTEMPTS {
        let probe = splitting_probe(k, f, rng);
        let d = f.gcd(k, &probe);
        let dd = d.degree().unwrap_or(0);
        if dd > 0 && dd < f.degree().unwrap() {
            let (other, _) = f.div_rem(k, &d);
            return split_linear(k, &d, rng, out) && split_linear(k, &other.monic(k), rng, out);
        }
    }
    false
}

/// A polynomial sharing a random subset of the roots of `f`.
fn splitting_probe(k: &FieldParams, f: &UniPoly, rng: &mut RngStream) -> UniPoly {
    let delta = k.random_element(rng, false);
    if k.p() == 2 {
        // Tr(δ·y) takes values in {0,1}; roots split by trace value
        let base = UniPoly::new(vec![FieldElement::ZERO, delta]).rem(k, f);
        let mut term = base.clone();
        let mut acc = base;
        for _ in 1..k.alpha() {
            term = term.mul(k, &term).rem(k, f);
            acc = acc.add(k, &term);
        }
        acc
    } else {
        let lin = UniPoly::new(vec![delta, FieldElement::ONE]);
        let pw = lin.pow_mod(k, (k.q() - 1) / 2, f);
        pw.sub(k, &UniPoly::constant(FieldElement::ONE))
    }
}

/// Brute-force root filter, the reference for [`find_roots`].
pub fn roots_by_evaluation(k: &FieldParams, g: &UniPoly, z: FieldElement) -> Vec<FieldElement> {
    let mut r: Vec<FieldElement> = k.elements().filter(|&y| g.eval(k, y) == z).collect();
    r.sort_by(|&a, &b| k.canonical_cmp(a, b));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    fn f(spec: &str) -> FieldParams {
        FieldParams::parse(spec).unwrap()
    }

    #[test]
    fn zero_poly_is_empty() {
        let p = UniPoly::new(vec![FieldElement::ZERO, FieldElement::ZERO]);
        assert!(p.coeffs().is_empty());
        assert_eq!(p.degree(), None);
    }

    #[test]
    fn squares_in_f7() {
        let k = f("7");
        let g = UniPoly::from_ints(&k, &[0, 0, 1]);
        assert_eq!(find_roots(&k, &g, FieldElement(4)), vec![FieldElement(2), FieldElement(5)]);
        assert!(find_roots(&k, &g, FieldElement(3)).is_empty());
    }

    #[test]
    fn div_rem_reconstructs() {
        let k = f("3^2");
        let mut rng = RngStream::seed_from(3);
        for _ in 0..50 {
            let a = UniPoly::new((0..6).map(|_| k.random_element(&mut rng, false)).collect());
            let mut dc: Vec<FieldElement> = (0..3).map(|_| k.random_element(&mut rng, false)).collect();
            dc.push(k.random_element(&mut rng, true));
            let d = UniPoly::new(dc);
            let (q, r) = a.div_rem(&k, &d);
            assert_eq!(q.mul(&k, &d).add(&k, &r), a);
            assert!(r.degree().is_none_or(|x| x < 3));
        }
    }

    #[test]
    fn roots_match_brute_force_exhaustively_small() {
        for spec in ["2", "3", "5", "2^2", "3^2", "2^3"] {
            let k = f(spec);
            let mut rng = RngStream::seed_from(11);
            for _ in 0..40 {
                let deg = 1 + (rng.next_u32() as usize % 5);
                let mut c: Vec<FieldElement> = (0..deg).map(|_| k.random_element(&mut rng, false)).collect();
                c.push(k.random_element(&mut rng, true));
                let g = UniPoly::new(c);
                for z in k.elements() {
                    assert_eq!(find_roots(&k, &g, z), roots_by_evaluation(&k, &g, z), "{spec} {g:?} {z:?}");
                }
            }
        }
    }

    #[test]
    fn roots_large_prime_and_extension() {
        for spec in ["101", "3^5", "2^10", "65521"] {
            let k = f(spec);
            let mut rng = RngStream::seed_from(5);
            for _ in 0..10 {
                // planted roots
                let rs: Vec<FieldElement> = (0..4).map(|_| k.random_element(&mut rng, false)).collect();
                let mut g = UniPoly::constant(FieldElement::ONE);
                for &r in &rs {
                    g = g.mul(&k, &UniPoly::new(vec![k.neg(r), FieldElement::ONE]));
                }
                let got = find_roots(&k, &g, FieldElement::ZERO);
                let mut want = rs.clone();
                want.sort_by(|&a, &b| k.canonical_cmp(a, b));
                want.dedup();
                assert_eq!(got, want, "{spec}");
            }
        }
    }

    fn arb_case() -> impl Strategy<Value = (FieldParams, Vec<u64>, u64)> {
        prop::sample::select(vec!["2", "7", "13", "2^2", "2^4", "3^2", "5^2", "3^3", "2^6", "7^2"]).prop_flat_map(|s| {
            let k = FieldParams::parse(s).unwrap();
            let q = k.q();
            (Just(k), prop::collection::vec(0..q, 2..=6), 0..q)
        })
    }

    proptest! {
        #[test]
        fn roots_agree_with_evaluation((k, c, z) in arb_case()) {
            let g = UniPoly::new(c.into_iter().map(FieldElement).collect());
            prop_assume!(g.degree().unwrap_or(0) >= 1);
            let r = find_roots(&k, &g, FieldElement(z));
            prop_assert!(r.len() <= g.degree().unwrap());
            prop_assert_eq!(r, roots_by_evaluation(&k, &g, FieldElement(z)));
        }
    }
}

//! Nontrivial zeros of diagonal forms `sum c_i d_i^b`.
//!
//! The solver is randomized but seeded from the normalized coefficient
//! ratios, so the answer depends only on the form up to a common scalar.

use crate::field::{find_roots, FieldElement, FieldParams, UniPoly};
use crate::rng::RngStream;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagError {
    #[error("diagonal form needs at least two coefficients")]
    TooShort,
    #[error("coefficient {0} is zero")]
    ZeroCoefficient(usize),
    #[error("exponent {b} must be positive and coprime to {p}")]
    BadExponent { b: u64, p: u64 },
    #[error("no nontrivial solution found for exponent {b} with {len} variables")]
    NoSolutionFound { b: u64, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalForm {
    pub b: u64,
    pub coeffs: Vec<FieldElement>,
}

impl DiagonalForm {
    pub fn new(k: &FieldParams, b: u64, coeffs: Vec<FieldElement>) -> Result<Self, DiagError> {
        if coeffs.len() < 2 {
            return Err(DiagError::TooShort);
        }
        if b == 0 || b.is_multiple_of(k.p()) {
            return Err(DiagError::BadExponent { b, p: k.p() });
        }
        if let Some(i) = coeffs.iter().position(|c| c.is_zero()) {
            return Err(DiagError::ZeroCoefficient(i));
        }
        Ok(DiagonalForm { b, coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, k: &FieldParams, d: &[FieldElement]) -> FieldElement {
        k.sum(self.coeffs.iter().zip(d).map(|(&c, &x)| k.mul(c, k.pow(x, self.b))))
    }
}

/// Scale so the first coefficient is one.
pub fn normalize_ratios(k: &FieldParams, form: &DiagonalForm) -> DiagonalForm {
    let s = k.inv(form.coeffs[0]).expect("coefficients are nonzero");
    DiagonalForm { b: form.b, coeffs: form.coeffs.iter().map(|&c| k.mul(c, s)).collect() }
}

const ZERO_ONE_MAX_LEN: usize = 12;
const SLICE_ATTEMPTS: usize = 20_000;
const EXHAUSTIVE_MAX: f64 = 1e7;

/// Find a nontrivial zero of the form.
///
/// The search runs in three phases: 0/1 vectors by increasing weight,
/// random slices solved for the first coordinate by a b-th root, and
/// exhaustive enumeration when `q^len` is small enough.
pub fn solve_diagonal(k: &FieldParams, form: &DiagonalForm) -> Result<Vec<FieldElement>, DiagError> {
    let n = normalize_ratios(k, form);
    let len = n.len();
    if n.b == 1 {
        let mut d = vec![k.zero(); len];
        d[0] = n.coeffs[1];
        d[1] = k.neg(n.coeffs[0]);
        return Ok(d);
    }
    if let Some(d) = zero_one_search(k, &n) {
        return Ok(d);
    }
    let mut rng = RngStream::seed_from(form_hash(k, &n));
    let root = RootExtractor::new(k, n.b);
    for _ in 0..SLICE_ATTEMPTS {
        let mut d: Vec<FieldElement> = (0..len).map(|_| k.random_element(&mut rng, true)).collect();
        d[0] = k.zero();
        let rest = n.eval(k, &d);
        // d0^b = -rest since c0 = 1
        if let Some(r) = root.root(k.neg(rest)) {
            d[0] = r;
            debug_assert!(n.eval(k, &d).is_zero());
            return Ok(d);
        }
    }
    if (k.q() as f64).powi(len as i32) <= EXHAUSTIVE_MAX {
        if let Some(d) = exhaustive(k, &n) {
            return Ok(d);
        }
    }
    Err(DiagError::NoSolutionFound { b: n.b, len })
}

fn zero_one_search(k: &FieldParams, n: &DiagonalForm) -> Option<Vec<FieldElement>> {
    let len = n.len().min(ZERO_ONE_MAX_LEN);
    for w in 2..=len {
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            if k.sum(idx.iter().map(|&i| n.coeffs[i])).is_zero() {
                let mut d = vec![k.zero(); n.len()];
                for &i in &idx {
                    d[i] = k.one();
                }
                return Some(d);
            }
            if !next_combination(&mut idx, len) {
                break;
            }
        }
    }
    None
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let w = idx.len();
    let mut i = w;
    while i > 0 {
        i -= 1;
        if idx[i] < n - w + i {
            idx[i] += 1;
            for j in i + 1..w {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn exhaustive(k: &FieldParams, n: &DiagonalForm) -> Option<Vec<FieldElement>> {
    let q = k.q();
    let len = n.len();
    let total = q.pow(len as u32);
    (1..total).find_map(|mut t| {
        let d: Vec<FieldElement> = (0..len)
            .map(|_| {
                let v = t % q;
                t /= q;
                k.from_index(v)
            })
            .collect();
        n.eval(k, &d).is_zero().then_some(d)
    })
}

fn form_hash(k: &FieldParams, n: &DiagonalForm) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let words = [k.p(), k.alpha() as u64, n.b, n.len() as u64];
    for w in words.into_iter().chain(n.coeffs.iter().map(|c| c.index())) {
        for byte in w.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        }
    }
    h
}

/// b-th roots in F_q: a power map when b is invertible mod q-1,
/// otherwise polynomial root finding.
struct RootExtractor {
    k: FieldParams,
    b: u64,
    inv_exp: Option<u64>,
}

impl RootExtractor {
    fn new(k: &FieldParams, b: u64) -> Self {
        let m = k.q() - 1;
        RootExtractor { k: k.clone(), b, inv_exp: mod_inverse(b % m.max(1), m) }
    }

    fn root(&self, a: FieldElement) -> Option<FieldElement> {
        if a.is_zero() {
            return Some(a);
        }
        let k = &self.k;
        match self.inv_exp {
            Some(e) => Some(k.pow(a, e)),
            None => find_roots(k, &UniPoly::monomial(k.one(), self.b as usize), a).first().copied(),
        }
    }
}

fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut t, mut nt) = (0i128, 1i128);
    let (mut r, mut nr) = (m as i128, a as i128);
    while nr != 0 {
        let qt = r / nr;
        (t, nt) = (nt, t - qt * nt);
        (r, nr) = (nr, r - qt * nr);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

//! Arithmetic in F_{p^α} over a polynomial basis.
//!
//! Elements are packed as `Σ c_i p^i` where `c_i` is the coordinate of `t^i`
//! in the basis `1, t, …, t^{α-1}` of `F_p[t]/(modulus)`. The packed value is
//! what [`FieldElement::index`] returns and what every table is keyed by.

mod poly;

pub use poly::{find_roots, roots_by_evaluation, UniPoly};

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use crate::rng::RngStream;

/// Largest field order accepted.
pub const MAX_ORDER: u64 = 1 << 32;

const MUL_TABLE_MAX: u64 = 256;
const INV_TABLE_MAX: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{alpha} exceeds the supported maximum")]
    TooLarge { p: u64, alpha: u32 },
    #[error("modulus {0:?} is not a monic irreducible polynomial of the right degree")]
    BadModulus(Vec<u64>),
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid field specification '{0}': {1}")]
    Parse(String, String),
    #[error("invalid element '{0}'")]
    BadElement(String),
}

/// A field element, valid only together with the [`FieldParams`] it came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, serde::Serialize)]
#[serde(transparent)]
pub struct FieldElement(pub(crate) u64);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    /// Packed index in `[0, q)`.
    pub fn index(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug)]
struct Inner {
    p: u64,
    alpha: u32,
    q: u64,
    /// Monic, constant term first, length alpha+1.
    modulus: Vec<u64>,
    pows: Vec<u64>,
    add: Option<Vec<u32>>,
    mul: Option<Vec<u32>>,
    inv: Option<Vec<u32>>,
    tr: Option<Vec<u8>>,
}

/// The field F_{p^α}. Cheap to clone; all clones share tables.
#[derive(Clone)]
pub struct FieldParams(Arc<Inner>);

impl fmt::Debug for FieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldParams({})", self.spec_string())
    }
}

impl PartialEq for FieldParams {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.modulus == other.0.modulus)
    }
}

impl Eq for FieldParams {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn checked_order(p: u64, alpha: u32) -> Option<u64> {
    let mut q = 1u64;
    for _ in 0..alpha {
        q = q.checked_mul(p)?;
        if q > MAX_ORDER {
            return None;
        }
    }
    Some(q)
}

// --- dense polynomials over Z_p, constant term first, used only for moduli ---

fn zp_trim(a: &mut Vec<u64>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn zp_inv(a: u64, p: u64) -> u64 {
    zp_pow(a, p - 2, p)
}

fn zp_pow(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * a % p;
        }
        a = a * a % p;
        e >>= 1;
    }
    r
}

fn zp_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    zp_trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = zp_inv(m[dm], p);
    while r.len() > dm {
        let top = r.len() - 1;
        let c = r[top] * lead_inv % p;
        if c != 0 {
            for (k, &mk) in m.iter().enumerate() {
                let idx = top - dm + k;
                r[idx] = (r[idx] + p - c * mk % p) % p;
            }
        }
        r.pop();
        zp_trim(&mut r);
    }
    r
}

/// Monic polynomials of the given degree, enumerated by numeric index of the
/// lower coefficients.
fn monic_of_degree(p: u64, deg: u32, idx: u64) -> Vec<u64> {
    let mut c = Vec::with_capacity(deg as usize + 1);
    let mut k = idx;
    for _ in 0..deg {
        c.push(k % p);
        k /= p;
    }
    c.push(1);
    c
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn zp_irreducible(m: &[u64], p: u64) -> bool {
    let deg = m.len() as u32 - 1;
    if deg == 0 || m[deg as usize] != 1 {
        return false;
    }
    if deg == 1 {
        return true;
    }
    for d in 1..=deg / 2 {
        let count = p.pow(d);
        for idx in 0..count {
            let f = monic_of_degree(p, d, idx);
            if zp_rem(m, &f, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Least monic irreducible of degree `alpha`, ordered by the numeric value of
/// its coefficient vector read with the highest coefficient most significant.
pub fn default_modulus(p: u64, alpha: u32) -> Vec<u64> {
    let count = p.pow(alpha);
    for idx in 0..count {
        // idx enumerates c_{α-1}…c_0 with c_{α-1} most significant
        let mut c = vec![0u64; alpha as usize + 1];
        let mut k = idx;
        for coef in c.iter_mut().take(alpha as usize) {
            *coef = k % p;
            k /= p;
        }
        c[alpha as usize] = 1;
        if zp_irreducible(&c, p) {
            return c;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl FieldParams {
    /// F_{p^α} with the default modulus.
    pub fn new(p: u64, alpha: u32) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if alpha == 0 {
            return Err(FieldError::ZeroDegree);
        }
        checked_order(p, alpha).ok_or(FieldError::TooLarge { p, alpha })?;
        let modulus = if alpha == 1 { vec![0, 1] } else { default_modulus(p, alpha) };
        Self::with_modulus(p, modulus)
    }

    pub fn prime(p: u64) -> Result<Self, FieldError> {
        Self::new(p, 1)
    }

    /// F_p[t]/(modulus). The modulus must be monic and irreducible.
    pub fn with_modulus(p: u64, modulus: Vec<u64>) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if modulus.len() < 2 {
            return Err(FieldError::ZeroDegree);
        }
        let alpha = (modulus.len() - 1) as u32;
        let q = checked_order(p, alpha).ok_or(FieldError::TooLarge { p, alpha })?;
        if modulus.iter().any(|&c| c >= p) || !zp_irreducible(&modulus, p) {
            return Err(FieldError::BadModulus(modulus));
        }
        let pows = (0..=alpha).map(|i| p.pow(i)).collect();
        let bare = FieldParams(Arc::new(Inner { p, alpha, q, modulus, pows, add: None, mul: None, inv: None, tr: None }));
        let (mut add_t, mut mul_t, mut inv_t, mut tr_t) = (None, None, None, None);
        if alpha > 1 && q <= MUL_TABLE_MAX {
            let mut add = vec![0u32; (q * q) as usize];
            let mut mul = vec![0u32; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    let k = (a * q + b) as usize;
                    add[k] = bare.add_slow(a, b) as u32;
                    mul[k] = bare.mul_slow(a, b) as u32;
                }
            }
            add_t = Some(add);
            mul_t = Some(mul);
        }
        if q <= INV_TABLE_MAX {
            let mut inv = vec![0u32; q as usize];
            let mut tr = vec![0u8; q as usize];
            for a in 1..q {
                inv[a as usize] = bare.pow_slow(a, q - 2) as u32;
                tr[a as usize] = bare.trace_slow(a) as u8;
            }
            inv_t = Some(inv);
            tr_t = if p <= 255 { Some(tr) } else { None };
        }
        let mut inner = Arc::try_unwrap(bare.0).expect("no other handles exist yet");
        inner.add = add_t;
        inner.mul = mul_t;
        inner.inv = inv_t;
        inner.tr = tr_t;
        Ok(FieldParams(Arc::new(inner)))
    }

    /// Parse `"p"`, `"p^alpha"` or `"p^alpha/modulus=[c0,c1,...]"`.
    pub fn parse(spec: &str) -> Result<Self, FieldError> {
        let err = |m: &str| FieldError::Parse(spec.to_string(), m.to_string());
        let s = spec.trim();
        let (head, modulus) = match s.split_once('/') {
            Some((h, rest)) => {
                let list = rest
                    .trim()
                    .strip_prefix("modulus=")
                    .ok_or_else(|| err("expected 'modulus=[...]' after '/'"))?;
                (h.trim(), Some(parse_list(list).map_err(|m| err(&m))?))
            }
            None => (s, None),
        };
        let (p, alpha) = match head.split_once('^') {
            Some((p, a)) => (
                p.trim().parse::<u64>().map_err(|_| err("bad characteristic"))?,
                a.trim().parse::<u32>().map_err(|_| err("bad extension degree"))?,
            ),
            None => (head.parse::<u64>().map_err(|_| err("bad characteristic"))?, 1),
        };
        match modulus {
            Some(m) => {
                if m.len() as u32 != alpha + 1 {
                    return Err(err("modulus degree does not match alpha"));
                }
                Self::with_modulus(p, m)
            }
            None => Self::new(p, alpha),
        }
    }

    /// Inverse of [`FieldParams::parse`]; always includes the modulus when α > 1.
    pub fn spec_string(&self) -> String {
        if self.alpha() == 1 {
            format!("{}", self.p())
        } else {
            format!("{}^{}/modulus={}", self.p(), self.alpha(), fmt_list(&self.0.modulus))
        }
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn alpha(&self) -> u32 {
        self.0.alpha
    }

    pub fn q(&self) -> u64 {
        self.0.q
    }

    pub fn modulus(&self) -> &[u64] {
        &self.0.modulus
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement::ZERO
    }

    pub fn one(&self) -> FieldElement {
        FieldElement::ONE
    }

    pub fn from_index(&self, i: u64) -> FieldElement {
        assert!(i < self.q(), "index {i} out of range for q = {}", self.q());
        FieldElement(i)
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        let p = self.p() as i64;
        FieldElement(n.rem_euclid(p) as u64)
    }

    pub fn from_coeffs(&self, coeffs: &[u64]) -> Result<FieldElement, FieldError> {
        if coeffs.len() > self.alpha() as usize || coeffs.iter().any(|&c| c >= self.p()) {
            return Err(FieldError::BadElement(fmt_list(coeffs)));
        }
        Ok(FieldElement(coeffs.iter().zip(&self.0.pows).map(|(c, w)| c * w).sum()))
    }

    pub fn coeffs(&self, a: FieldElement) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.alpha() as usize);
        let mut k = a.0;
        for _ in 0..self.alpha() {
            v.push(k % self.p());
            k /= self.p();
        }
        v
    }

    /// The basis element `t`, coordinates `[0, 1]`. Zero when α = 1.
    pub fn generator(&self) -> FieldElement {
        if self.alpha() == 1 {
            FieldElement(0)
        } else {
            FieldElement(self.p())
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q()).map(FieldElement)
    }

    pub fn format(&self, a: FieldElement) -> String {
        fmt_list(&self.coeffs(a))
    }

    /// Parse `"[c0,...]"` or, in a prime field, a bare integer.
    pub fn parse_element(&self, s: &str) -> Result<FieldElement, FieldError> {
        let t = s.trim();
        if t.starts_with('[') {
            let c = parse_list(t).map_err(|_| FieldError::BadElement(s.to_string()))?;
            self.from_coeffs(&c)
        } else {
            let n: i64 = t.parse().map_err(|_| FieldError::BadElement(s.to_string()))?;
            if self.alpha() == 1 {
                Ok(self.from_int(n))
            } else {
                Err(FieldError::BadElement(s.to_string()))
            }
        }
    }

    /// Lexicographic order on coordinate vectors, `c0` compared first.
    pub fn canonical_cmp(&self, a: FieldElement, b: FieldElement) -> Ordering {
        if self.alpha() == 1 {
            return a.0.cmp(&b.0);
        }
        self.coeffs(a).cmp(&self.coeffs(b))
    }

    // --- arithmetic ---

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let i = &*self.0;
        if i.alpha == 1 {
            let s = a.0 + b.0;
            return FieldElement(if s >= i.p { s - i.p } else { s });
        }
        if let Some(t) = &i.add {
            return FieldElement(t[(a.0 * i.q + b.0) as usize] as u64);
        }
        FieldElement(self.add_slow(a.0, b.0))
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        let i = &*self.0;
        if i.alpha == 1 {
            return FieldElement(if a.0 == 0 { 0 } else { i.p - a.0 });
        }
        let mut k = a.0;
        let mut out = 0;
        for w in &i.pows[..i.alpha as usize] {
            let c = k % i.p;
            k /= i.p;
            out += ((i.p - c) % i.p) * w;
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let i = &*self.0;
        if i.alpha == 1 {
            return FieldElement(a.0 * b.0 % i.p);
        }
        if let Some(t) = &i.mul {
            return FieldElement(t[(a.0 * i.q + b.0) as usize] as u64);
        }
        FieldElement(self.mul_slow(a.0, b.0))
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        if let Some(t) = &self.0.inv {
            return Ok(FieldElement(t[a.0 as usize] as u64));
        }
        Ok(self.pow(a, self.q() - 2))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut base = a;
        let mut r = FieldElement::ONE;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        r
    }

    /// Multiply by an integer (its image in F_p).
    pub fn scale(&self, a: FieldElement, n: u64) -> FieldElement {
        self.mul(a, FieldElement(n % self.p()))
    }

    /// `Tr(a) = Σ_{j<α} a^{p^j}`, returned as an integer in `[0, p)`.
    pub fn trace(&self, a: FieldElement) -> u64 {
        if self.alpha() == 1 {
            return a.0;
        }
        if let Some(t) = &self.0.tr {
            return t[a.0 as usize] as u64;
        }
        self.trace_slow(a.0)
    }

    /// `a^{p^{k mod α}}`; negative `k` gives the inverse Frobenius.
    pub fn frobenius_pow(&self, a: FieldElement, k: i64) -> FieldElement {
        let alpha = self.alpha() as i64;
        if alpha == 1 {
            return a;
        }
        let k = k.rem_euclid(alpha) as u32;
        let mut r = a;
        for _ in 0..k {
            r = self.pow(r, self.p());
        }
        r
    }

    pub fn random_element(&self, rng: &mut RngStream, nonzero: bool) -> FieldElement {
        if nonzero {
            FieldElement(rng.gen_range(1..self.q()))
        } else {
            FieldElement(rng.gen_range(0..self.q()))
        }
    }

    pub fn sum<I: IntoIterator<Item = FieldElement>>(&self, it: I) -> FieldElement {
        it.into_iter().fold(FieldElement::ZERO, |acc, x| self.add(acc, x))
    }

    // --- table-free paths ---

    fn add_slow(&self, a: u64, b: u64) -> u64 {
        let i = &*self.0;
        let (mut x, mut y, mut out) = (a, b, 0);
        for w in &i.pows[..i.alpha as usize] {
            out += ((x % i.p + y % i.p) % i.p) * w;
            x /= i.p;
            y /= i.p;
        }
        out
    }

    fn mul_slow(&self, a: u64, b: u64) -> u64 {
        let i = &*self.0;
        let n = i.alpha as usize;
        let (p, ca, cb) = (i.p, self.coeffs(FieldElement(a)), self.coeffs(FieldElement(b)));
        let mut prod = vec![0u64; 2 * n - 1];
        for (x, &u) in ca.iter().enumerate() {
            if u == 0 {
                continue;
            }
            for (y, &v) in cb.iter().enumerate() {
                prod[x + y] = (prod[x + y] + u * v) % p;
            }
        }
        // modulus is monic: t^n = -Σ m_k t^k
        for top in (n..prod.len()).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for k in 0..n {
                let idx = top - n + k;
                prod[idx] = (prod[idx] + p - c * i.modulus[k] % p) % p;
            }
        }
        prod[..n].iter().zip(&i.pows).map(|(c, w)| c * w).sum()
    }

    fn pow_slow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a;
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = if self.alpha() == 1 { r * base % self.p() } else { self.mul_slow(r, base) };
            }
            base = if self.alpha() == 1 { base * base % self.p() } else { self.mul_slow(base, base) };
            e >>= 1;
        }
        r
    }

    fn trace_slow(&self, a: u64) -> u64 {
        let mut acc = 0;
        let mut x = a;
        for _ in 0..self.alpha() {
            acc = self.add_slow(acc, x);
            x = self.pow_slow(x, self.p());
        }
        debug_assert!(acc < self.p(), "trace left the prime field");
        acc
    }
}

fn parse_list(s: &str) -> Result<Vec<u64>, String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("expected a bracketed list, got '{s}'"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad coefficient '{t}'")))
        .collect()
}

fn fmt_list(c: &[u64]) -> String {
    let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(","))
}

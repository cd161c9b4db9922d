//! Dense amplitude vectors over F_q-valued registers.

use num_complex::Complex64;
use rand::Rng;

use super::{omega_pow, MeasurementRecord, RegId, StateError};
use crate::field::{FieldElement, FieldParams, UniPoly};
use crate::rng::RngStream;

/// Row-major amplitudes; the first register in `regs` is most significant.
#[derive(Clone, Debug)]
pub struct DenseState {
    field: FieldParams,
    regs: Vec<RegId>,
    amps: Vec<Complex64>,
}

pub(crate) fn checked_size(q: u64, n: usize, cap: u64) -> Result<usize, StateError> {
    q.checked_pow(n as u32)
        .filter(|&s| s <= cap)
        .map(|s| s as usize)
        .ok_or(StateError::CapacityExceeded { regs: n as u32, cap })
}

impl DenseState {
    pub fn from_parts(field: FieldParams, regs: Vec<RegId>, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len() as u64, field.q().pow(regs.len() as u32));
        DenseState { field, regs, amps }
    }

    /// Basis state `|values⟩`.
    pub fn basis(field: &FieldParams, regs: Vec<RegId>, values: &[FieldElement], cap: u64) -> Result<Self, StateError> {
        let size = checked_size(field.q(), regs.len(), cap)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); size];
        let idx = values.iter().fold(0u64, |acc, v| acc * field.q() + v.index());
        amps[idx as usize] = Complex64::new(1.0, 0.0);
        Ok(DenseState { field: field.clone(), regs, amps })
    }

    /// `q^{-1/2} Σ_x |w_1 + f_1(x)⟩…|x⟩` on registers `u` then `x`.
    pub fn level_set(
        field: &FieldParams,
        u: &[RegId],
        x: RegId,
        w: &[FieldElement],
        f: &[UniPoly],
        cap: u64,
    ) -> Result<Self, StateError> {
        let q = field.q();
        let mut regs = u.to_vec();
        regs.push(x);
        let size = checked_size(q, regs.len(), cap)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); size];
        let a = 1.0 / (q as f64).sqrt();
        for xv in field.elements() {
            let mut idx = 0u64;
            for (fi, &wi) in f.iter().zip(w) {
                idx = idx * q + field.add(wi, fi.eval(field, xv)).index();
            }
            idx = idx * q + xv.index();
            amps[idx as usize] = Complex64::new(a, 0.0);
        }
        Ok(DenseState { field: field.clone(), regs, amps })
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn regs(&self) -> &[RegId] {
        &self.regs
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn pos(&self, r: RegId) -> Result<usize, StateError> {
        self.regs.iter().position(|&x| x == r).ok_or(StateError::InvalidRegister(r))
    }

    fn stride(&self, pos: usize) -> usize {
        self.field.q().pow((self.regs.len() - 1 - pos) as u32) as usize
    }

    /// Amplitude at the basis point given as values in `regs` order.
    pub fn amp_at(&self, values: &[FieldElement]) -> Complex64 {
        let idx = values.iter().fold(0u64, |acc, v| acc * self.field.q() + v.index());
        self.amps[idx as usize]
    }

    fn digits(&self, mut idx: usize, out: &mut [u64]) {
        let q = self.field.q() as usize;
        for d in out.iter_mut().rev() {
            *d = (idx % q) as u64;
            idx /= q;
        }
    }

    fn index_of(&self, d: &[u64]) -> usize {
        let q = self.field.q();
        d.iter().fold(0u64, |acc, &v| acc * q + v) as usize
    }

    pub fn product(states: Vec<DenseState>, cap: u64) -> Result<DenseState, StateError> {
        let mut it = states.into_iter();
        let mut acc = it.next().expect("product of no states");
        for s in it {
            let n = acc.regs.len() + s.regs.len();
            checked_size(acc.field.q(), n, cap)?;
            let mut amps = Vec::with_capacity(acc.amps.len() * s.amps.len());
            for &a in &acc.amps {
                for &b in &s.amps {
                    amps.push(a * b);
                }
            }
            acc.regs.extend_from_slice(&s.regs);
            acc.amps = amps;
        }
        Ok(acc)
    }

    pub fn append_uniform(&mut self, r: RegId, cap: u64) -> Result<(), StateError> {
        let q = self.field.q() as usize;
        checked_size(self.field.q(), self.regs.len() + 1, cap)?;
        let a = 1.0 / (q as f64).sqrt();
        let mut amps = Vec::with_capacity(self.amps.len() * q);
        for &x in &self.amps {
            amps.extend(std::iter::repeat_n(x * a, q));
        }
        self.amps = amps;
        self.regs.push(r);
        Ok(())
    }

    /// Apply `q^{-1/2}[ω^{±Tr(ab)}]` on one register.
    pub fn qft(&mut self, r: RegId, inverse: bool) -> Result<(), StateError> {
        let k = self.field.clone();
        let q = k.q() as usize;
        let pos = self.pos(r)?;
        let stride = self.stride(pos);
        let s = 1.0 / (q as f64).sqrt();
        let p = k.p();
        let mut mat = vec![Complex64::new(0.0, 0.0); q * q];
        for a in 0..q {
            for b in 0..q {
                let t = k.trace(k.mul(FieldElement(a as u64), FieldElement(b as u64)));
                let t = if inverse { (p - t) % p } else { t };
                mat[a * q + b] = omega_pow(&k, t) * s;
            }
        }
        let block = stride * q;
        let mut buf = vec![Complex64::new(0.0, 0.0); q];
        for base in (0..self.amps.len()).step_by(block) {
            for off in 0..stride {
                for (b, slot) in buf.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..q {
                        let v = self.amps[base + off + a * stride];
                        if v.re != 0.0 || v.im != 0.0 {
                            acc += mat[a * q + b] * v;
                        }
                    }
                    *slot = acc;
                }
                for (b, &v) in buf.iter().enumerate() {
                    self.amps[base + off + b * stride] = v;
                }
            }
        }
        Ok(())
    }

    /// Apply a basis permutation given on digit vectors.
    fn relabel(&mut self, mut f: impl FnMut(&mut [u64])) {
        let n = self.regs.len();
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        let mut d = vec![0u64; n];
        for idx in 0..self.amps.len() {
            let a = self.amps[idx];
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            self.digits(idx, &mut d);
            f(&mut d);
            out[self.index_of(&d)] += a;
        }
        self.amps = out;
    }

    /// `|x_i⟩|x⟩ → |x_i − δ_i x⟩|x⟩`.
    pub fn shear(&mut self, deltas: &[(RegId, FieldElement)], src: RegId) -> Result<(), StateError> {
        let k = self.field.clone();
        let sp = self.pos(src)?;
        let targets: Vec<(usize, FieldElement)> =
            deltas.iter().map(|&(r, d)| Ok((self.pos(r)?, d))).collect::<Result<_, StateError>>()?;
        self.relabel(|d| {
            let x = FieldElement(d[sp]);
            for &(p, delta) in &targets {
                d[p] = k.sub(FieldElement(d[p]), k.mul(delta, x)).index();
            }
        });
        Ok(())
    }

    /// `|u⟩|x⟩ → |u − poly(x)⟩|x⟩`.
    pub fn subtract_poly(&mut self, target: RegId, src: RegId, poly: &UniPoly) -> Result<(), StateError> {
        let k = self.field.clone();
        let (tp, sp) = (self.pos(target)?, self.pos(src)?);
        if tp == sp {
            return Err(StateError::SymbolicUnsupported("subtract_poly needs distinct registers".into()));
        }
        self.relabel(|d| {
            let v = poly.eval(&k, FieldElement(d[sp]));
            d[tp] = k.sub(FieldElement(d[tp]), v).index();
        });
        Ok(())
    }

    /// `|x⟩ → |x^{p^k}⟩`.
    pub fn power_substitute(&mut self, r: RegId, kk: i64) -> Result<(), StateError> {
        let k = self.field.clone();
        let p = self.pos(r)?;
        self.relabel(|d| d[p] = k.frobenius_pow(FieldElement(d[p]), kk).index());
        Ok(())
    }

    /// Joint outcome distribution of `regs`, keyed row-major in `regs` order.
    fn marginal(&self, pos: &[usize]) -> Vec<f64> {
        let q = self.field.q();
        let mut m = vec![0.0; q.pow(pos.len() as u32) as usize];
        let mut d = vec![0u64; self.regs.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            self.digits(idx, &mut d);
            let key = pos.iter().fold(0u64, |acc, &p| acc * q + d[p]);
            m[key as usize] += w;
        }
        m
    }

    /// Project onto the given outcomes, drop those registers and renormalize.
    /// Returns the probability of the outcome.
    pub fn collapse(&mut self, outcomes: &[(RegId, FieldElement)]) -> Result<f64, StateError> {
        let pos: Vec<usize> = outcomes.iter().map(|&(r, _)| self.pos(r)).collect::<Result<_, _>>()?;
        let keep: Vec<usize> = (0..self.regs.len()).filter(|p| !pos.contains(p)).collect();
        let q = self.field.q();
        let mut out = vec![Complex64::new(0.0, 0.0); q.pow(keep.len() as u32) as usize];
        let mut d = vec![0u64; self.regs.len()];
        let mut total = 0.0;
        let mut hit = 0.0;
        for (idx, &a) in self.amps.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            total += w;
            self.digits(idx, &mut d);
            if pos.iter().zip(outcomes).all(|(&p, &(_, v))| d[p] == v.index()) {
                hit += w;
                let k = keep.iter().fold(0u64, |acc, &p| acc * q + d[p]);
                out[k as usize] = a;
            }
        }
        if hit <= 1e-300 {
            return Err(StateError::ZeroProbability);
        }
        let s = 1.0 / hit.sqrt();
        for a in out.iter_mut() {
            *a *= s;
        }
        self.regs = keep.iter().map(|&p| self.regs[p]).collect();
        self.amps = out;
        Ok(hit / total)
    }

    /// Born-rule measurement of `regs`, one register at a time; each record
    /// carries the conditional probability of its outcome.
    pub fn measure(&mut self, regs: &[RegId], rng: &mut RngStream) -> Result<Vec<MeasurementRecord>, StateError> {
        let mut out = Vec::with_capacity(regs.len());
        for &r in regs {
            let marg = self.marginal(&[self.pos(r)?]);
            let total: f64 = marg.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = marg.len() - 1;
            for (i, &m) in marg.iter().enumerate() {
                if u < m {
                    pick = i;
                    break;
                }
                u -= m;
            }
            while marg[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            let outcome = FieldElement(pick as u64);
            let probability = self.collapse(&[(r, outcome)])?;
            out.push(MeasurementRecord { reg: r, outcome, probability });
        }
        Ok(out)
    }

    /// Inverse transform then measure the single register.
    pub fn extract_linear(&mut self, rng: &mut RngStream) -> Result<(FieldElement, f64), StateError> {
        if self.regs.len() != 1 {
            return Err(StateError::NonlinearExponent);
        }
        let r = self.regs[0];
        self.qft(r, true)?;
        let rec = self.measure(&[r], rng)?;
        Ok((rec[0].outcome, rec[0].probability))
    }

    /// Distance to `other` after removing the best global phase, assuming the
    /// same register order.
    pub fn distance_up_to_phase(&self, other: &DenseState) -> f64 {
        if self.regs != other.regs || self.amps.len() != other.amps.len() {
            return f64::INFINITY;
        }
        let inner: Complex64 = self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum();
        let phase = if inner.norm() > 0.0 { inner / inner.norm() } else { Complex64::new(1.0, 0.0) };
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn describe(&self) -> String {
        format!("dense[{}]", self.amps.len())
    }
}

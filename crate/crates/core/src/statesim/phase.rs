//! Symbolic phase states.
//!
//! A phase state is `N^{-1/2} Σ_x weight(x) ω^{Tr(e(x))} |regs(x)⟩` where `x`
//! ranges over the free registers and every dependent register holds a fixed
//! polynomial in them. Level-set states `Σ_x |w + f(x)⟩|x⟩` have `x` free and
//! `u = w + f(x)` dependent; after the first Fourier transform everything is
//! free and only the exponent carries information.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use super::mpoly::MPoly;
use super::{omega_pow, DenseState, MeasurementRecord, RegId, StateError};
use crate::field::{FieldElement, FieldParams, UniPoly};
use crate::rng::RngStream;

/// Nonnegative amplitude weights over the free registers, row-major in
/// `regs` order.
#[derive(Clone, Debug)]
pub struct Weight {
    pub regs: Vec<RegId>,
    pub table: Arc<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct PhaseState {
    field: FieldParams,
    regs: Vec<RegId>,
    deps: BTreeMap<RegId, MPoly>,
    exponent: MPoly,
    weight: Option<Weight>,
}

impl PhaseState {
    /// Uniform superposition over the given free registers, zero exponent.
    pub fn uniform(field: &FieldParams, regs: Vec<RegId>) -> Self {
        PhaseState { field: field.clone(), regs, deps: BTreeMap::new(), exponent: MPoly::zero(), weight: None }
    }

    /// `Σ_x |w_1 + f_1(x)⟩…|w_m + f_m(x)⟩|x⟩` on registers `u` then `x`.
    pub fn level_set(field: &FieldParams, u: &[RegId], x: RegId, w: &[FieldElement], f: &[UniPoly]) -> Self {
        assert_eq!(u.len(), w.len());
        assert_eq!(u.len(), f.len());
        let mut regs = u.to_vec();
        regs.push(x);
        let mut deps = BTreeMap::new();
        for ((&r, &wi), fi) in u.iter().zip(w).zip(f) {
            let h = MPoly::univariate(fi.coeffs(), x).add(field, &MPoly::constant(wi));
            deps.insert(r, h);
        }
        PhaseState { field: field.clone(), regs, deps, exponent: MPoly::zero(), weight: None }
    }

    /// Single free register with an explicit exponent.
    pub fn with_exponent(field: &FieldParams, regs: Vec<RegId>, exponent: MPoly) -> Self {
        PhaseState { field: field.clone(), regs, deps: BTreeMap::new(), exponent, weight: None }
    }

    pub fn with_weight(mut self, weight: Weight) -> Result<Self, StateError> {
        let free = self.free_regs();
        if weight.regs != free || weight.table.len() as u64 != self.field.q().pow(free.len() as u32) {
            return Err(StateError::SymbolicUnsupported("weight table does not match the free registers".into()));
        }
        self.weight = Some(weight);
        Ok(self)
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn regs(&self) -> &[RegId] {
        &self.regs
    }

    pub fn exponent(&self) -> &MPoly {
        &self.exponent
    }

    pub fn dependent(&self, r: RegId) -> Option<&MPoly> {
        self.deps.get(&r)
    }

    pub fn is_weighted(&self) -> bool {
        self.weight.is_some()
    }

    pub fn free_regs(&self) -> Vec<RegId> {
        self.regs.iter().copied().filter(|r| !self.deps.contains_key(r)).collect()
    }

    fn require_unweighted(&self, op: &str) -> Result<(), StateError> {
        if self.weight.is_some() {
            return Err(StateError::SymbolicUnsupported(format!("{op} on a weighted phase state")));
        }
        Ok(())
    }

    fn require_live(&self, r: RegId) -> Result<(), StateError> {
        if self.regs.contains(&r) {
            Ok(())
        } else {
            Err(StateError::InvalidRegister(r))
        }
    }

    /// Replace free variable `r` by `rep` everywhere.
    fn substitute_free(&mut self, r: RegId, rep: &MPoly) {
        let k = self.field.clone();
        self.exponent = self.exponent.substitute(&k, r, rep);
        for h in self.deps.values_mut() {
            *h = h.substitute(&k, r, rep);
        }
    }

    pub fn product(states: Vec<PhaseState>) -> Result<PhaseState, StateError> {
        let mut it = states.into_iter();
        let mut acc = it.next().expect("product of no states");
        acc.require_unweighted("product")?;
        for s in it {
            s.require_unweighted("product")?;
            acc.regs.extend_from_slice(&s.regs);
            acc.deps.extend(s.deps);
            acc.exponent = acc.exponent.add(&acc.field, &s.exponent);
        }
        Ok(acc)
    }

    pub fn append_uniform(&mut self, r: RegId) -> Result<(), StateError> {
        self.require_unweighted("append_uniform")?;
        self.regs.push(r);
        Ok(())
    }

    pub fn qft(&mut self, r: RegId, inverse: bool) -> Result<(), StateError> {
        self.require_unweighted("qft")?;
        self.require_live(r)?;
        let k = self.field.clone();
        if let Some(h) = self.deps.remove(&r) {
            // |h(x)⟩ → Σ_y ω^{±Tr(y·h(x))}|y⟩
            let mut term = MPoly::var(r).mul(&k, &h);
            if inverse {
                term = term.scale(&k, k.neg(k.one()));
            }
            self.exponent = self.exponent.add(&k, &term);
            return Ok(());
        }
        if self.deps.values().any(|h| h.mentions(r)) {
            return Err(StateError::SymbolicUnsupported(format!("qft on r{} which other registers depend on", r.0)));
        }
        let Some((c, rest)) = self.exponent.split_linear(r) else {
            return Err(StateError::SymbolicUnsupported(format!("qft on r{} with a nonlinear phase", r.0)));
        };
        // Σ_x ω^{Tr(c x)}|x⟩ → |−c⟩ forward, |c⟩ inverse
        let h = if inverse { c } else { c.scale(&k, k.neg(k.one())) };
        self.exponent = rest;
        self.deps.insert(r, h);
        Ok(())
    }

    pub fn shear(&mut self, deltas: &[(RegId, FieldElement)], src: RegId) -> Result<(), StateError> {
        self.require_unweighted("shear_subtract")?;
        self.require_live(src)?;
        if self.deps.contains_key(&src) {
            return Err(StateError::SymbolicUnsupported("shear source must be a free register".into()));
        }
        let k = self.field.clone();
        for &(r, d) in deltas {
            self.require_live(r)?;
            if d.is_zero() {
                continue;
            }
            let dx = MPoly::term(d, src, 1);
            if let Some(h) = self.deps.get_mut(&r) {
                *h = h.sub(&k, &dx);
            } else {
                // new r' = r − δx, so old r = r' + δx
                let rep = MPoly::var(r).add(&k, &dx);
                self.substitute_free(r, &rep);
            }
        }
        Ok(())
    }

    pub fn subtract_poly(&mut self, target: RegId, src: RegId, poly: &UniPoly) -> Result<(), StateError> {
        self.require_unweighted("subtract_poly")?;
        self.require_live(target)?;
        self.require_live(src)?;
        if target == src {
            return Err(StateError::SymbolicUnsupported("subtract_poly needs distinct registers".into()));
        }
        if poly.is_zero() {
            return Ok(());
        }
        let k = self.field.clone();
        let src_val = self.deps.get(&src).cloned().unwrap_or_else(|| MPoly::var(src));
        if src_val.mentions(target) {
            return Err(StateError::SymbolicUnsupported("source depends on target".into()));
        }
        let mut pv = MPoly::zero();
        for &c in poly.coeffs().iter().rev() {
            pv = pv.mul(&k, &src_val).add(&k, &MPoly::constant(c));
        }
        if let Some(h) = self.deps.get_mut(&target) {
            *h = h.sub(&k, &pv);
        } else {
            let rep = MPoly::var(target).add(&k, &pv);
            self.substitute_free(target, &rep);
        }
        Ok(())
    }

    /// Relabel `|x⟩ → |x^{p^k}⟩` on a free register.
    pub fn power_substitute(&mut self, r: RegId, k: i64) -> Result<(), StateError> {
        self.require_unweighted("power_substitute")?;
        self.require_live(r)?;
        if self.deps.contains_key(&r) {
            return Err(StateError::SymbolicUnsupported("power_substitute on a dependent register".into()));
        }
        let alpha = self.field.alpha() as i64;
        let back = (-k).rem_euclid(alpha) as u32;
        if back == 0 {
            return Ok(());
        }
        let e = self.field.p().pow(back);
        let rep = MPoly::term(self.field.one(), r, e);
        self.substitute_free(r, &rep);
        Ok(())
    }

    /// Measure `regs`. Outcomes on free registers are uniform; a dependent
    /// register must be constant once the free ones are fixed.
    pub fn measure(
        &mut self,
        regs: &[RegId],
        rng: &mut RngStream,
    ) -> Result<Vec<MeasurementRecord>, StateError> {
        for &r in regs {
            self.require_live(r)?;
        }
        let k = self.field.clone();
        let mut outcomes: BTreeMap<RegId, (FieldElement, f64)> = BTreeMap::new();
        let free: Vec<RegId> = regs.iter().copied().filter(|r| !self.deps.contains_key(r)).collect();
        if let Some(w) = self.weight.take() {
            let mut cur = Some(w);
            for &r in &free {
                let w = cur.take().expect("weight table covers every free register");
                let (v, prob, rest) = sample_weighted(&k, &w, r, rng)?;
                outcomes.insert(r, (v, prob));
                cur = rest;
            }
            self.weight = cur;
        } else {
            for &r in &free {
                outcomes.insert(r, (k.random_element(rng, false), 1.0 / k.q() as f64));
            }
        }
        for (&r, &(v, _)) in &outcomes {
            self.exponent = self.exponent.partial_eval(&k, r, v);
            for h in self.deps.values_mut() {
                *h = h.partial_eval(&k, r, v);
            }
        }
        for &r in regs {
            if let Some(h) = self.deps.get(&r) {
                if !h.vars().is_empty() {
                    return Err(StateError::SymbolicUnsupported(format!(
                        "measuring r{} whose value is not determined",
                        r.0
                    )));
                }
                outcomes.insert(r, (h.constant_term(), 1.0));
                self.deps.remove(&r);
            }
        }
        self.exponent = self.exponent.without_constant();
        self.regs.retain(|r| !regs.contains(r));
        Ok(regs.iter().map(|&r| MeasurementRecord { reg: r, outcome: outcomes[&r].0, probability: outcomes[&r].1 }).collect())
    }

    /// Force the outcomes of free registers. Used to keep two backends on the
    /// same branch.
    pub fn collapse(&mut self, records: &[MeasurementRecord]) -> Result<(), StateError> {
        self.require_unweighted("collapse")?;
        let k = self.field.clone();
        for rec in records {
            self.require_live(rec.reg)?;
            if self.deps.contains_key(&rec.reg) {
                continue;
            }
            self.exponent = self.exponent.partial_eval(&k, rec.reg, rec.outcome);
            for h in self.deps.values_mut() {
                *h = h.partial_eval(&k, rec.reg, rec.outcome);
            }
        }
        for rec in records {
            if let Some(h) = self.deps.get(&rec.reg) {
                if !h.vars().is_empty() || h.constant_term() != rec.outcome {
                    return Err(StateError::ZeroProbability);
                }
                self.deps.remove(&rec.reg);
            }
        }
        self.exponent = self.exponent.without_constant();
        self.regs.retain(|r| !records.iter().any(|rec| rec.reg == *r));
        Ok(())
    }

    /// `c` from an exponent `c·x` on the single live register.
    pub fn linear_coefficient(&self) -> Result<FieldElement, StateError> {
        if self.regs.len() != 1 || !self.deps.is_empty() || self.weight.is_some() {
            return Err(StateError::NonlinearExponent);
        }
        let r = self.regs[0];
        let e = self.exponent.without_constant();
        let c = e.coeff_of_power(r, 1);
        if e.num_terms() > usize::from(!c.is_zero()) {
            return Err(StateError::NonlinearExponent);
        }
        Ok(c)
    }

    pub fn dims(&self) -> u32 {
        self.regs.len() as u32
    }

    /// Amplitudes in `regs` order.
    pub fn to_dense(&self, cap: u64) -> Result<DenseState, StateError> {
        let k = &self.field;
        let q = k.q();
        let n = self.regs.len() as u32;
        let size = q.checked_pow(n).filter(|&s| s <= cap).ok_or(StateError::CapacityExceeded { regs: n, cap })?;
        let free = self.free_regs();
        let nf = free.len() as u32;
        let mut amps = vec![Complex64::new(0.0, 0.0); size as usize];
        let mut vals = vec![FieldElement::ZERO; free.len()];
        let lookup = |vals: &[FieldElement], r: RegId| vals[free.iter().position(|&f| f == r).unwrap()];
        let mut norm2 = 0.0;
        for idx in 0..q.pow(nf) {
            let mut t = idx;
            for v in vals.iter_mut().rev() {
                *v = FieldElement(t % q);
                t /= q;
            }
            let wt = match &self.weight {
                Some(w) => w.table[idx as usize],
                None => 1.0,
            };
            if wt == 0.0 {
                continue;
            }
            let ph = self.exponent.eval(k, |r| lookup(&vals, r));
            let mut full = 0u64;
            for &r in &self.regs {
                let v = match self.deps.get(&r) {
                    Some(h) => h.eval(k, |s| lookup(&vals, s)),
                    None => lookup(&vals, r),
                };
                full = full * q + v.index();
            }
            let a = omega_pow(k, k.trace(ph)) * wt;
            amps[full as usize] += a;
            norm2 += wt * wt;
        }
        let s = 1.0 / norm2.sqrt();
        for a in amps.iter_mut() {
            *a *= s;
        }
        Ok(DenseState::from_parts(k.clone(), self.regs.clone(), amps))
    }

    pub fn describe(&self) -> String {
        let k = &self.field;
        let mut s = self.exponent.format(k);
        for (r, h) in &self.deps {
            s.push_str(&format!("; r{}={}", r.0, h.format(k)));
        }
        if self.weight.is_some() {
            s.push_str("; weighted");
        }
        s
    }
}

type WeightedSample = (FieldElement, f64, Option<Weight>);

/// Sample one register of a weight table; returns the outcome, its
/// probability and the conditional table on the remaining registers.
fn sample_weighted(k: &FieldParams, w: &Weight, r: RegId, rng: &mut RngStream) -> Result<WeightedSample, StateError> {
    let q = k.q();
    let pos = w.regs.iter().position(|&x| x == r).ok_or(StateError::InvalidRegister(r))?;
    let stride = q.pow((w.regs.len() - 1 - pos) as u32);
    let digit = |idx: u64| (idx / stride) % q;
    let mut marg = vec![0.0; q as usize];
    for (idx, &x) in w.table.iter().enumerate() {
        marg[digit(idx as u64) as usize] += x * x;
    }
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
    let prob = marg[pick] / total;
    let rest_regs: Vec<RegId> = w.regs.iter().copied().filter(|&x| x != r).collect();
    let rest = if rest_regs.is_empty() {
        None
    } else {
        let table: Vec<f64> =
            w.table.iter().enumerate().filter(|(idx, _)| digit(*idx as u64) == pick as u64).map(|(_, &x)| x).collect();
        Some(Weight { regs: rest_regs, table: Arc::new(table) })
    };
    Ok((FieldElement(pick as u64), prob, rest))
}

//! Quantum states of the algorithm in two interchangeable backends.
//!
//! [`SimContext`] owns register allocation, the optional debug trace and the
//! cross-check bookkeeping. Every operation consumes a [`State`] and returns
//! a new one.

mod dense;
pub mod mpoly;
mod phase;

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dense::DenseState;
pub use mpoly::MPoly;
pub use phase::{PhaseState, Weight};

use crate::field::{FieldElement, FieldParams, UniPoly};
use crate::rng::RngStream;

pub const DEFAULT_DENSE_CAP: u64 = 1 << 24;
pub const CROSS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Phase,
    Dense,
    CrossCheck,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("dense state with {regs} registers exceeds the cap of {cap} amplitudes")]
    CapacityExceeded { regs: u32, cap: u64 },
    #[error("operation leaves the symbolic representation: {0}")]
    SymbolicUnsupported(String),
    #[error("phase is not linear in the remaining register")]
    NonlinearExponent,
    #[error("register r{} is not live", .0 .0)]
    InvalidRegister(RegId),
    #[error("outcome has zero probability")]
    ZeroProbability,
    #[error("backends disagree: {0}")]
    BackendMismatch(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub reg: RegId,
    pub outcome: FieldElement,
    /// Conditional on the earlier records of the same measurement.
    pub probability: f64,
}

#[derive(Clone, Debug)]
pub enum State {
    Phase(PhaseState),
    Dense(DenseState),
    Cross(PhaseState, DenseState),
}

impl State {
    pub fn regs(&self) -> &[RegId] {
        match self {
            State::Phase(p) | State::Cross(p, _) => p.regs(),
            State::Dense(d) => d.regs(),
        }
    }

    pub fn phase(&self) -> Option<&PhaseState> {
        match self {
            State::Phase(p) | State::Cross(p, _) => Some(p),
            State::Dense(_) => None,
        }
    }

    pub fn dense(&self) -> Option<&DenseState> {
        match self {
            State::Dense(d) | State::Cross(_, d) => Some(d),
            State::Phase(_) => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            State::Phase(p) | State::Cross(p, _) => p.describe(),
            State::Dense(d) => d.describe(),
        }
    }
}

/// `ω^t` with `ω = e^{2πi/p}`.
pub fn omega_pow(k: &FieldParams, t: u64) -> Complex64 {
    let a = 2.0 * std::f64::consts::PI * (t % k.p()) as f64 / k.p() as f64;
    Complex64::from_polar(1.0, a)
}

pub struct SimContext {
    field: FieldParams,
    backend: Backend,
    dense_cap: u64,
    next_reg: u32,
    trace: Option<Vec<String>>,
    comparisons: u64,
    discrepancies: u64,
}

impl SimContext {
    pub fn new(field: &FieldParams, backend: Backend) -> Self {
        SimContext {
            field: field.clone(),
            backend,
            dense_cap: DEFAULT_DENSE_CAP,
            next_reg: 0,
            trace: None,
            comparisons: 0,
            discrepancies: 0,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn with_dense_cap(mut self, cap: u64) -> Self {
        self.dense_cap = cap;
        self
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn dense_cap(&self) -> u64 {
        self.dense_cap
    }

    /// Number of cross-backend state comparisons performed.
    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    /// Number of cross-backend comparisons that failed.
    pub fn discrepancies(&self) -> u64 {
        self.discrepancies
    }

    pub fn trace(&self) -> Option<&[String]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// A fresh register id. Ids are never reused within one context.
    pub fn alloc(&mut self) -> RegId {
        let r = RegId(self.next_reg);
        self.next_reg += 1;
        r
    }

    fn log(&mut self, op: &str, regs: &[RegId], out: &[MeasurementRecord], s: Option<&State>) {
        let Some(t) = self.trace.as_mut() else { return };
        let mut line = String::from(op);
        let ids: Vec<String> = regs.iter().map(|r| format!("r{}", r.0)).collect();
        let _ = write!(line, " regs=[{}]", ids.join(","));
        if !out.is_empty() {
            let vals: Vec<String> = out.iter().map(|m| self.field.format(m.outcome)).collect();
            let _ = write!(line, " out=[{}]", vals.join(","));
        }
        if let Some(s) = s {
            let _ = write!(line, " e={}", s.describe());
        }
        t.push(line);
    }

    fn check(&mut self, s: &State) {
        if let State::Cross(p, d) = s {
            if let Ok(pd) = p.to_dense(self.dense_cap) {
                self.comparisons += 1;
                if pd.distance_up_to_phase(d) > CROSS_TOLERANCE {
                    self.discrepancies += 1;
                }
            }
        }
    }

    fn finish(&mut self, op: &str, regs: &[RegId], out: &[MeasurementRecord], s: State) -> State {
        self.check(&s);
        self.log(op, regs, out, Some(&s));
        s
    }

    /// Wrap a phase state according to the context backend.
    pub fn from_phase(&mut self, p: PhaseState) -> Result<State, StateError> {
        Ok(match self.backend {
            Backend::Phase => State::Phase(p),
            Backend::Dense => State::Dense(p.to_dense(self.dense_cap)?),
            Backend::CrossCheck => {
                let d = p.to_dense(self.dense_cap)?;
                State::Cross(p, d)
            }
        })
    }

    /// `Σ_x |w + f(x)⟩|x⟩`, normalized, on `m` fresh registers then `x`.
    pub fn prepare_level_set(&mut self, w: &[FieldElement], f: &[UniPoly]) -> Result<State, StateError> {
        assert_eq!(w.len(), f.len(), "one offset per output coordinate");
        let u: Vec<RegId> = (0..w.len()).map(|_| self.alloc()).collect();
        let x = self.alloc();
        let k = self.field.clone();
        let s = match self.backend {
            Backend::Phase => State::Phase(PhaseState::level_set(&k, &u, x, w, f)),
            Backend::Dense => State::Dense(DenseState::level_set(&k, &u, x, w, f, self.dense_cap)?),
            Backend::CrossCheck => State::Cross(
                PhaseState::level_set(&k, &u, x, w, f),
                DenseState::level_set(&k, &u, x, w, f, self.dense_cap)?,
            ),
        };
        let mut regs = u;
        regs.push(x);
        Ok(self.finish("prepare_level_set", &regs, &[], s))
    }

    pub fn qft(&mut self, s: State, reg: RegId, inverse: bool) -> Result<State, StateError> {
        let s = match s {
            State::Phase(mut p) => {
                p.qft(reg, inverse)?;
                State::Phase(p)
            }
            State::Dense(mut d) => {
                d.qft(reg, inverse)?;
                State::Dense(d)
            }
            State::Cross(mut p, mut d) => {
                p.qft(reg, inverse)?;
                d.qft(reg, inverse)?;
                State::Cross(p, d)
            }
        };
        Ok(self.finish(if inverse { "iqft" } else { "qft" }, &[reg], &[], s))
    }

    pub fn product(&mut self, states: Vec<State>) -> Result<State, StateError> {
        let mut ps = Vec::new();
        let mut ds = Vec::new();
        for s in states {
            match s {
                State::Phase(p) => ps.push(p),
                State::Dense(d) => ds.push(d),
                State::Cross(p, d) => {
                    ps.push(p);
                    ds.push(d);
                }
            }
        }
        let s = match (ps.is_empty(), ds.is_empty()) {
            (false, true) => State::Phase(PhaseState::product(ps)?),
            (true, false) => State::Dense(DenseState::product(ds, self.dense_cap)?),
            (false, false) if ps.len() == ds.len() => {
                State::Cross(PhaseState::product(ps)?, DenseState::product(ds, self.dense_cap)?)
            }
            _ => return Err(StateError::BackendMismatch("product of states from different backends".into())),
        };
        let regs = s.regs().to_vec();
        Ok(self.finish("product", &regs, &[], s))
    }

    pub fn append_uniform(&mut self, s: State) -> Result<(State, RegId), StateError> {
        let r = self.alloc();
        let cap = self.dense_cap;
        let s = match s {
            State::Phase(mut p) => {
                p.append_uniform(r)?;
                State::Phase(p)
            }
            State::Dense(mut d) => {
                d.append_uniform(r, cap)?;
                State::Dense(d)
            }
            State::Cross(mut p, mut d) => {
                p.append_uniform(r)?;
                d.append_uniform(r, cap)?;
                State::Cross(p, d)
            }
        };
        Ok((self.finish("append_uniform", &[r], &[], s), r))
    }

    /// Subtract `deltas[i]·src` from the i-th live register other than `src`.
    pub fn shear_subtract(&mut self, s: State, deltas: &[FieldElement], src: RegId) -> Result<State, StateError> {
        let others: Vec<RegId> = s.regs().iter().copied().filter(|&r| r != src).collect();
        if others.len() != deltas.len() {
            return Err(StateError::InvalidRegister(src));
        }
        let pairs: Vec<(RegId, FieldElement)> = others.into_iter().zip(deltas.iter().copied()).collect();
        let s = match s {
            State::Phase(mut p) => {
                p.shear(&pairs, src)?;
                State::Phase(p)
            }
            State::Dense(mut d) => {
                d.shear(&pairs, src)?;
                State::Dense(d)
            }
            State::Cross(mut p, mut d) => {
                p.shear(&pairs, src)?;
                d.shear(&pairs, src)?;
                State::Cross(p, d)
            }
        };
        Ok(self.finish("shear_subtract", &[src], &[], s))
    }

    pub fn measure(
        &mut self,
        s: State,
        regs: &[RegId],
        rng: &mut RngStream,
    ) -> Result<(State, Vec<MeasurementRecord>), StateError> {
        let (s, recs) = match s {
            State::Phase(mut p) => {
                let r = p.measure(regs, rng)?;
                (State::Phase(p), r)
            }
            State::Dense(mut d) => {
                let r = d.measure(regs, rng)?;
                (State::Dense(d), r)
            }
            State::Cross(mut p, mut d) => {
                let r = p.measure(regs, rng)?;
                let outcomes: Vec<(RegId, FieldElement)> = r.iter().map(|m| (m.reg, m.outcome)).collect();
                let want: f64 = r.iter().map(|m| m.probability).product();
                self.comparisons += 1;
                match d.collapse(&outcomes) {
                    Ok(got) if (got - want).abs() <= CROSS_TOLERANCE => {}
                    Ok(_) => self.discrepancies += 1,
                    Err(_) => {
                        self.discrepancies += 1;
                        return Err(StateError::BackendMismatch("symbolic outcome impossible in dense state".into()));
                    }
                }
                (State::Cross(p, d), r)
            }
        };
        Ok((self.finish("measure", regs, &recs, s), recs))
    }

    /// Fourier transform each listed register, then measure them all.
    pub fn fourier_measure_first(
        &mut self,
        s: State,
        regs: &[RegId],
        rng: &mut RngStream,
    ) -> Result<(State, Vec<MeasurementRecord>), StateError> {
        let mut s = s;
        for &r in regs {
            s = self.qft(s, r, false)?;
        }
        self.measure(s, regs, rng)
    }

    pub fn subtract_poly(&mut self, s: State, target: RegId, src: RegId, poly: &UniPoly) -> Result<State, StateError> {
        let s = match s {
            State::Phase(mut p) => {
                p.subtract_poly(target, src, poly)?;
                State::Phase(p)
            }
            State::Dense(mut d) => {
                d.subtract_poly(target, src, poly)?;
                State::Dense(d)
            }
            State::Cross(mut p, mut d) => {
                p.subtract_poly(target, src, poly)?;
                d.subtract_poly(target, src, poly)?;
                State::Cross(p, d)
            }
        };
        Ok(self.finish("subtract_poly", &[target, src], &[], s))
    }

    /// Relabel `|x⟩ → |x^{p^k}⟩`, which turns a phase `c·x^{p^k}` into `c·x`.
    pub fn power_substitute(&mut self, s: State, reg: RegId, k: i64) -> Result<State, StateError> {
        let s = match s {
            State::Phase(mut p) => {
                p.power_substitute(reg, k)?;
                State::Phase(p)
            }
            State::Dense(mut d) => {
                d.power_substitute(reg, k)?;
                State::Dense(d)
            }
            State::Cross(mut p, mut d) => {
                p.power_substitute(reg, k)?;
                d.power_substitute(reg, k)?;
                State::Cross(p, d)
            }
        };
        Ok(self.finish("power_substitute", &[reg], &[], s))
    }

    /// Read `c` from a single-register state `Σ_x ω^{Tr(c x)}|x⟩`. The dense
    /// backend gets it by inverse transform and measurement.
    pub fn extract_linear_phase(&mut self, s: State, rng: &mut RngStream) -> Result<FieldElement, StateError> {
        let regs = s.regs().to_vec();
        let c = match s {
            State::Phase(p) => p.linear_coefficient()?,
            State::Dense(mut d) => d.extract_linear(rng)?.0,
            State::Cross(p, mut d) => {
                let c = p.linear_coefficient()?;
                let r = regs[0];
                d.qft(r, true)?;
                self.comparisons += 1;
                match d.collapse(&[(r, c)]) {
                    Ok(prob) if prob >= 1.0 - CROSS_TOLERANCE => {}
                    _ => self.discrepancies += 1,
                }
                c
            }
        };
        let rec = MeasurementRecord { reg: regs[0], outcome: c, probability: 1.0 };
        self.log("extract_linear_phase", &regs, &[rec], None);
        Ok(c)
    }

    /// Product of `group`, append a uniform register `x`, subtract
    /// `deltas[i]·x` from the i-th member's register and measure all members.
    /// Returns the single-register residual state and the measured values.
    ///
    /// Dense groups of single-register states use a factorized sampler that
    /// never forms the product: with `x0` uniform and `x_i ~ |ψ_i|²`
    /// independent, the outcomes `x_i − δ_i x0` have the Born distribution of
    /// the sheared product and the residual amplitude is `Π ψ_i(x'_i + δ_i x)`.
    pub fn shear_measure(
        &mut self,
        group: Vec<State>,
        deltas: &[FieldElement],
        rng: &mut RngStream,
    ) -> Result<(State, Vec<FieldElement>), StateError> {
        assert_eq!(group.len(), deltas.len());
        let fused = group.iter().all(|s| matches!(s, State::Dense(d) if d.regs().len() == 1));
        if fused {
            let ds: Vec<DenseState> = group
                .into_iter()
                .map(|s| match s {
                    State::Dense(d) => d,
                    _ => unreachable!(),
                })
                .collect();
            return self.shear_measure_fused(ds, deltas, rng);
        }
        let members: Vec<RegId> = group.iter().flat_map(|s| s.regs().to_vec()).collect();
        if members.len() != group.len() {
            return Err(StateError::SymbolicUnsupported("shear_measure needs single-register states".into()));
        }
        let s = self.product(group)?;
        let (s, x) = self.append_uniform(s)?;
        let s = self.shear_subtract(s, deltas, x)?;
        let (s, recs) = self.measure(s, &members, rng)?;
        Ok((s, recs.iter().map(|m| m.outcome).collect()))
    }

    fn shear_measure_fused(
        &mut self,
        group: Vec<DenseState>,
        deltas: &[FieldElement],
        rng: &mut RngStream,
    ) -> Result<(State, Vec<FieldElement>), StateError> {
        let k = self.field.clone();
        let q = k.q();
        let x = self.alloc();
        let x0 = k.random_element(rng, false);
        let mut outs = Vec::with_capacity(group.len());
        for (d, &delta) in group.iter().zip(deltas) {
            let total: f64 = d.norm_sqr();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = q - 1;
            for (i, a) in d.amps().iter().enumerate() {
                let w = a.norm_sqr();
                if u < w {
                    pick = i as u64;
                    break;
                }
                u -= w;
            }
            while d.amps()[pick as usize].norm_sqr() == 0.0 && pick > 0 {
                pick -= 1;
            }
            outs.push(k.sub(FieldElement(pick), k.mul(delta, x0)));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); q as usize];
        for xv in k.elements() {
            let mut a = Complex64::new(1.0, 0.0);
            for ((d, &delta), &o) in group.iter().zip(deltas).zip(&outs) {
                a *= d.amps()[k.add(o, k.mul(delta, xv)).index() as usize];
            }
            amps[xv.index() as usize] = a;
        }
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in amps.iter_mut() {
            *a /= n;
        }
        let s = State::Dense(DenseState::from_parts(k.clone(), vec![x], amps));
        let members: Vec<RegId> = group.iter().map(|d| d.regs()[0]).collect();
        let recs: Vec<MeasurementRecord> = members
            .iter()
            .zip(&outs)
            .map(|(&reg, &outcome)| MeasurementRecord { reg, outcome, probability: 1.0 })
            .collect();
        self.log("shear_measure", &members, &recs, Some(&s));
        Ok((s, outs))
    }

    pub fn to_dense(&self, p: &PhaseState) -> Result<DenseState, StateError> {
        p.to_dense(self.dense_cap)
    }
}

#[cfg(test)]
mod tests;

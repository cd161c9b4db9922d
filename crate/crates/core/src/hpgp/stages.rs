use super::plan::{NonPStep, PPowerStep};
use super::table::{is_p_power, log_p, BinomialTable, CoeffTable, Stage};
use super::{AbortCause, HpgpError, LinearConstraint};
use crate::diag::{solve_diagonal, DiagError, DiagonalForm};
use crate::field::{FieldElement, FieldParams};
use crate::rng::RngStream;
use crate::statesim::{RegId, SimContext, State};

/// A single-register phase state with the table describing its exponent
/// as `Σ_j v_j Σ_s Y_{js} x^s`.
#[derive(Debug, Clone)]
pub struct Phased {
    pub state: State,
    pub table: CoeffTable,
}

impl Phased {
    /// Single-degree support at `x^{p^t}`, which `finish_linear` accepts.
    pub fn finishable(&self, p: u64) -> Option<usize> {
        let degs = self.table.support_degrees();
        if degs.len() != 1 {
            return None;
        }
        match self.table.stage {
            Stage::PPower => Some(degs[0]),
            Stage::General => is_p_power(p, degs[0] as u64).then(|| log_p(p, degs[0] as u64)),
        }
    }
}

#[derive(Debug)]
pub enum StepOutcome {
    Done(Phased),
    PassThrough(Phased),
    Aborted(AbortCause),
}

#[derive(Debug)]
pub enum InitialOutcome {
    Kept(Phased),
    Rejected,
}

/// Transform and measure the `u` registers of a level-set state, leaving
/// `Σ_x ω^{Tr(Σ_j v_j Σ_s Y_{js} x^s)}|x⟩` with `Y_{js} = Σ_i y_i a_{isj}`.
pub fn initial_stage(
    ctx: &mut SimContext,
    state: State,
    a: &[Vec<Vec<FieldElement>>],
    controls: &[usize],
    rng: &mut RngStream,
) -> Result<InitialOutcome, HpgpError> {
    let k = ctx.field().clone();
    let m = a.len();
    let regs = state.regs().to_vec();
    if regs.len() != m + 1 {
        return Err(HpgpError::Internal(format!("level-set state has {} registers, expected {}", regs.len(), m + 1)));
    }
    let (state, recs) = ctx.fourier_measure_first(state, &regs[..m], rng)?;
    let y: Vec<FieldElement> = recs.iter().map(|r| r.outcome).collect();
    let degree = a[0].len() - 1;
    let r = a[0][0].len();
    let mut entries = vec![vec![FieldElement::ZERO; degree + 1]; r];
    for (j, row) in entries.iter_mut().enumerate() {
        for (s, e) in row.iter_mut().enumerate().skip(1) {
            *e = k.sum((0..m).map(|i| k.mul(y[i], a[i][s][j])));
        }
    }
    let table = CoeffTable::general(entries, controls.to_vec());
    if table.is_zero() {
        return Ok(InitialOutcome::Rejected);
    }
    Ok(InitialOutcome::Kept(Phased { state, table }))
}

fn single_reg(s: &State) -> Result<RegId, HpgpError> {
    match s.regs() {
        [r] => Ok(*r),
        regs => Err(HpgpError::Internal(format!("expected a single register, found {}", regs.len()))),
    }
}

/// One general-stage elimination over a group of `n + 1` states.
pub fn eliminate_nonp_step(
    ctx: &mut SimContext,
    group: Vec<Phased>,
    step: &NonPStep,
    next_controls: &[usize],
    binom: &BinomialTable,
    rng: &mut RngStream,
) -> Result<StepOutcome, HpgpError> {
    let k = ctx.field().clone();
    let (j0, n) = (step.j0, step.n);
    if let Some(i) = group.iter().position(|g| g.table.get(j0, n).is_zero()) {
        let mut out = group.into_iter().nth(i).expect("index in range");
        out.table.controls = next_controls.to_vec();
        return Ok(StepOutcome::PassThrough(out));
    }
    if group.len() != step.ell {
        return Err(HpgpError::Internal(format!("group of {} for a step needing {}", group.len(), step.ell)));
    }
    let coeffs: Vec<FieldElement> =
        group.iter().map(|g| k.frobenius_pow(g.table.get(j0, n), -(step.beta as i64))).collect();
    let form = DiagonalForm::new(&k, step.b, coeffs).map_err(|e| HpgpError::Internal(e.to_string()))?;
    let deltas = match solve_diagonal(&k, &form) {
        Ok(d) => d,
        Err(DiagError::NoSolutionFound { .. }) => return Ok(StepOutcome::Aborted(AbortCause::DiagBudget)),
        Err(e) => return Err(HpgpError::Internal(e.to_string())),
    };
    let tables: Vec<CoeffTable> = group.iter().map(|g| g.table.clone()).collect();
    let states: Vec<State> = group.into_iter().map(|g| g.state).collect();
    let (state, xs) = ctx.shear_measure(states, &deltas, rng)?;
    let entries = shear_update(&k, binom, &tables, &xs, &deltas);
    let table = CoeffTable::general(entries, next_controls.to_vec());

    let old = &step.controls;
    let survived = (0..table.r()).any(|j| (1..=old[j]).any(|s| !table.get(j, s).is_zero()));
    if !survived {
        return Ok(StepOutcome::Aborted(AbortCause::SchwartzZippel));
    }
    if !table.get(j0, n).is_zero() || !table.invariant_holds(k.p()) {
        return Err(HpgpError::Invariant(format!("table invariant after eliminating ({}, {n})", j0 + 1)));
    }
    Ok(StepOutcome::Done(Phased { state, table }))
}

/// `Y*_{jk} = Σ_{s≥k} C(s,k) Σ_i Y^{(i)}_{js} x_i^{s-k} δ_i^k`.
pub fn shear_update(
    k: &FieldParams,
    binom: &BinomialTable,
    tables: &[CoeffTable],
    xs: &[FieldElement],
    deltas: &[FieldElement],
) -> Vec<Vec<FieldElement>> {
    let r = tables[0].r();
    let degree = tables[0].entries[0].len() - 1;
    let mut out = vec![vec![FieldElement::ZERO; degree + 1]; r];
    for (j, row) in out.iter_mut().enumerate() {
        for (kk, e) in row.iter_mut().enumerate().skip(1) {
            let mut acc = FieldElement::ZERO;
            for s in kk..=degree {
                let c = binom.get(s, kk);
                if c == 0 {
                    continue;
                }
                let inner = k.sum(tables.iter().zip(xs).zip(deltas).map(|((t, &x), &d)| {
                    k.mul(t.get(j, s), k.mul(k.pow(x, (s - kk) as u64), k.pow(d, kk as u64)))
                }));
                acc = k.add(acc, k.scale(inner, c));
            }
            *e = acc;
        }
    }
    out
}

/// Is there `z` with `Z2_{jt} = z^{p^t} Z1_{jt}` for all `j, t`?
pub fn ratio_abort(k: &FieldParams, z1: &CoeffTable, z2: &CoeffTable) -> bool {
    let mut cand = None;
    'find: for (r1, r2) in z1.entries.iter().zip(&z2.entries) {
        for (t, (&a, &b)) in r1.iter().zip(r2).enumerate() {
            if !a.is_zero() && !b.is_zero() {
                let ratio = k.div(b, a).expect("nonzero");
                cand = Some(k.frobenius_pow(ratio, -(t as i64)));
                break 'find;
            }
        }
    }
    let Some(z) = cand else { return false };
    z1.entries.iter().zip(&z2.entries).all(|(r1, r2)| {
        r1.iter().zip(r2).enumerate().all(|(t, (&a, &b))| b == k.mul(k.frobenius_pow(z, t as i64), a))
    })
}

/// One p-power elimination over a pair.
pub fn eliminate_ppower_step(
    ctx: &mut SimContext,
    first: Phased,
    second: Phased,
    step: &PPowerStep,
    next_controls: &[usize],
    rng: &mut RngStream,
) -> Result<StepOutcome, HpgpError> {
    let k = ctx.field().clone();
    let (j0, n) = (step.j0, step.t);
    let pass = |mut s: Phased| {
        s.table.controls = next_controls.to_vec();
        Ok(StepOutcome::PassThrough(s))
    };
    let z1 = first.table.get(j0, n);
    let z2 = second.table.get(j0, n);
    if z1.is_zero() {
        return pass(first);
    }
    if z2.is_zero() {
        return pass(second);
    }
    let d1 = first.table.support_degrees();
    let d2 = second.table.support_degrees();
    if !d1.iter().any(|t1| d2.iter().any(|t2| t1 != t2)) {
        return pass(first);
    }
    if ratio_abort(&k, &first.table, &second.table) {
        return Ok(StepOutcome::Aborted(AbortCause::PPowerRatio));
    }
    let delta2 = k.neg(k.frobenius_pow(k.div(z1, z2).expect("nonzero"), -(n as i64)));
    let deltas = [k.one(), delta2];
    let (state, _) = ctx.shear_measure(vec![first.state, second.state], &deltas, rng)?;
    let entries: Vec<Vec<FieldElement>> = first
        .table
        .entries
        .iter()
        .zip(&second.table.entries)
        .map(|(r1, r2)| {
            r1.iter()
                .zip(r2)
                .enumerate()
                .map(|(t, (&a, &b))| k.add(a, k.mul(b, k.frobenius_pow(delta2, t as i64))))
                .collect()
        })
        .collect();
    let table = CoeffTable { stage: Stage::PPower, entries, controls: next_controls.to_vec() };
    if !table.get(j0, n).is_zero() || !table.invariant_holds(k.p()) {
        return Err(HpgpError::Invariant(format!("table invariant after p-power step at ({}, {n})", j0 + 1)));
    }
    Ok(StepOutcome::Done(Phased { state, table }))
}

/// Undo the Frobenius on the register, read the linear coefficient and
/// return the constraint `Σ_j Z_{j,t*} v_j = β`.
pub fn finish_linear(ctx: &mut SimContext, node: Phased, rng: &mut RngStream) -> Result<LinearConstraint, HpgpError> {
    let p = ctx.field().p();
    let t = node.finishable(p).ok_or(HpgpError::Internal("finish on a table with several degrees".into()))?;
    let col = match node.table.stage {
        Stage::PPower => t,
        Stage::General => p.pow(t as u32) as usize,
    };
    let alpha: Vec<FieldElement> = (0..node.table.r()).map(|j| node.table.get(j, col)).collect();
    let x = single_reg(&node.state)?;
    let state = if t > 0 { ctx.power_substitute(node.state, x, t as i64)? } else { node.state };
    let beta = ctx.extract_linear_phase(state, rng)?;
    Ok(LinearConstraint { alpha, beta })
}

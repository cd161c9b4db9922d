use super::plan::{plan_inner, supports_of, InnerPlan};
use super::stages::{
    eliminate_nonp_step, eliminate_ppower_step, finish_linear, initial_stage, InitialOutcome, Phased, StepOutcome,
};
use super::table::{BinomialTable, Stage};
use super::{AbortCause, HpgpError, InnerStats, LevelSetSource, LinearConstraint};
use crate::field::{FieldElement, UniPoly};
use crate::rng::RngStream;
use crate::statesim::{SimContext, State};

/// The hidden function after some parameters have been substituted away:
/// the current tensor over the remaining parameters and the polynomial
/// shifts to subtract from fresh level-set states.
#[derive(Debug, Clone)]
pub struct Reduced {
    pub a: Vec<Vec<Vec<FieldElement>>>,
    /// Original indices of the remaining parameters.
    pub params: Vec<usize>,
    pub shift: Vec<UniPoly>,
}

impl Reduced {
    pub fn new(model: &super::HiddenModel) -> Self {
        Reduced {
            a: model.tensor().to_vec(),
            params: (0..model.r()).collect(),
            shift: vec![UniPoly::zero(); model.m()],
        }
    }

    pub fn r(&self) -> usize {
        self.params.len()
    }

    pub fn degree(&self) -> usize {
        self.a[0].len() - 1
    }

    pub fn plan(&self, p: u64) -> Result<InnerPlan, HpgpError> {
        plan_inner(p, self.degree(), &supports_of(&self.a, self.r()))
    }
}

/// Fresh level-set state with the accumulated shifts subtracted.
pub fn shifted_state(
    source: &dyn LevelSetSource,
    reduced: &Reduced,
    ctx: &mut SimContext,
    rng: &mut RngStream,
) -> Result<State, HpgpError> {
    let mut s = source.fresh_state(ctx, rng)?;
    let regs = s.regs().to_vec();
    let x = *regs.last().expect("level-set state has registers");
    for (i, poly) in reduced.shift.iter().enumerate() {
        if !poly.is_zero() {
            s = ctx.subtract_poly(s, regs[i], x, poly)?;
        }
    }
    Ok(s)
}

struct Walker<'a> {
    source: &'a dyn LevelSetSource,
    reduced: &'a Reduced,
    plan: &'a InnerPlan,
    binom: &'a BinomialTable,
    budget: u64,
    stats: &'a mut InnerStats,
    p: u64,
}

enum Node {
    Ready(Phased),
    /// A state that can already be finished; carried straight to the root.
    Early(Phased),
}

impl Walker<'_> {
    fn levels(&self) -> usize {
        self.plan.general.len() + self.plan.ppower.len()
    }

    fn general_controls(&self, level: usize) -> Vec<usize> {
        match self.plan.general.get(level) {
            Some(step) => step.controls.clone(),
            None => self.plan.general_out.clone(),
        }
    }

    fn ppower_controls(&self, level: usize) -> Vec<usize> {
        match self.plan.ppower.get(level - self.plan.general.len()) {
            Some(step) => step.controls.clone(),
            None => self.plan.ppower_out.clone(),
        }
    }

    fn wrap(&self, node: Phased) -> Node {
        if node.finishable(self.p).is_some() {
            Node::Early(node)
        } else {
            Node::Ready(node)
        }
    }

    /// Produce one node at `level`, or `None` once the budget is spent.
    fn produce(&mut self, ctx: &mut SimContext, level: usize, rng: &mut RngStream) -> Result<Option<Node>, HpgpError> {
        let g = self.plan.general.len();
        if level == 0 {
            let controls = self.general_controls(0);
            loop {
                if self.stats.states_consumed >= self.budget {
                    return Ok(None);
                }
                self.stats.states_consumed += 1;
                let s = shifted_state(self.source, self.reduced, ctx, rng)?;
                match initial_stage(ctx, s, &self.reduced.a, &controls, rng)? {
                    InitialOutcome::Kept(n) => return Ok(Some(self.wrap(n))),
                    InitialOutcome::Rejected => self.stats.count_abort(AbortCause::RejectedInitial),
                }
            }
        }
        if level <= g {
            let next_controls = self.general_controls(level);
            let step = &self.plan.general[level - 1];
            loop {
                let mut group = Vec::with_capacity(step.ell);
                for _ in 0..step.ell {
                    match self.produce(ctx, level - 1, rng)? {
                        None => return Ok(None),
                        Some(Node::Early(n)) => return Ok(Some(Node::Early(n))),
                        Some(Node::Ready(mut n)) => {
                            if n.table.get(step.j0, step.n).is_zero() {
                                self.stats.passthroughs += 1;
                                n.table.controls = next_controls.clone();
                                return Ok(Some(self.wrap(n)));
                            }
                            group.push(n);
                        }
                    }
                }
                self.stats.nonp_steps += 1;
                match eliminate_nonp_step(ctx, group, step, &next_controls, self.binom, rng)? {
                    StepOutcome::Done(n) => return Ok(Some(self.wrap(n))),
                    StepOutcome::PassThrough(n) => {
                        self.stats.passthroughs += 1;
                        return Ok(Some(self.wrap(n)));
                    }
                    StepOutcome::Aborted(c) => self.stats.count_abort(c),
                }
            }
        }
        let step = &self.plan.ppower[level - g - 1];
        let next_controls = self.ppower_controls(level);
        loop {
            let mut pair = Vec::with_capacity(2);
            for _ in 0..2 {
                match self.produce(ctx, level - 1, rng)? {
                    None => return Ok(None),
                    Some(Node::Early(n)) => return Ok(Some(Node::Early(n))),
                    Some(Node::Ready(n)) => {
                        let mut n = self.to_ppower(n, level - 1)?;
                        if n.table.get(step.j0, step.t).is_zero() {
                            self.stats.passthroughs += 1;
                            n.table.controls = next_controls.clone();
                            return Ok(Some(self.wrap(n)));
                        }
                        pair.push(n);
                    }
                }
            }
            let second = pair.pop().expect("pair");
            let first = pair.pop().expect("pair");
            self.stats.ppower_steps += 1;
            match eliminate_ppower_step(ctx, first, second, step, &next_controls, rng)? {
                StepOutcome::Done(n) => return Ok(Some(self.wrap(n))),
                StepOutcome::PassThrough(n) => {
                    self.stats.passthroughs += 1;
                    return Ok(Some(self.wrap(n)));
                }
                StepOutcome::Aborted(c) => self.stats.count_abort(c),
            }
        }
    }

    fn to_ppower(&self, n: Phased, level: usize) -> Result<Phased, HpgpError> {
        if n.table.stage == Stage::PPower {
            return Ok(n);
        }
        let mut table = n
            .table
            .to_p_power(self.p, self.reduced.degree())
            .ok_or_else(|| HpgpError::Invariant("non-p-power degree left after the general stage".into()))?;
        table.controls = self.ppower_controls(level);
        Ok(Phased { state: n.state, table })
    }
}

/// Extract one linear constraint on the remaining parameters, spending at
/// most `budget` level-set states. `Ok(None)` means the budget ran out.
pub fn inner_procedure(
    source: &dyn LevelSetSource,
    reduced: &Reduced,
    plan: &InnerPlan,
    ctx: &mut SimContext,
    budget: u64,
    binom: &BinomialTable,
    stats: &mut InnerStats,
    rng: &mut RngStream,
) -> Result<Option<LinearConstraint>, HpgpError> {
    let p = ctx.field().p();
    let start = stats.states_consumed;
    let mut w = Walker { source, reduced, plan, binom, budget: start + budget, stats, p };
    let levels = w.levels();
    let node = match w.produce(ctx, levels, rng)? {
        None => return Ok(None),
        Some(Node::Early(n)) | Some(Node::Ready(n)) => n,
    };
    let c = finish_linear(ctx, node, rng)?;
    if c.alpha.iter().all(|a| a.is_zero()) {
        return Err(HpgpError::Internal("constraint with all-zero coefficients".into()));
    }
    Ok(Some(c))
}

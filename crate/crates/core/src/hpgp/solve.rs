use super::inner::{inner_procedure, Reduced};
use super::table::BinomialTable;
use super::{HpgpError, InnerStats, LevelSetSource, LinearConstraint, DEFAULT_MULTIPLIER};
use crate::field::{FieldElement, UniPoly};
use crate::rng::RngStream;
use crate::statesim::{Backend, SimContext, DEFAULT_DENSE_CAP};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub backend: Backend,
    /// Each constraint extraction may use `multiplier` times its tree size.
    pub multiplier: u64,
    /// Replacement binomial table; `None` builds the correct one.
    pub binomials: Option<BinomialTable>,
    pub dense_cap: u64,
    pub trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            backend: Backend::Phase,
            multiplier: DEFAULT_MULTIPLIER,
            binomials: None,
            dense_cap: DEFAULT_DENSE_CAP,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveFailure {
    /// Constraint number `index` (from zero) ran out of states.
    Budget { index: usize },
    /// The substituted function no longer depends on the remaining unknowns.
    Degenerate,
}

/// A constraint together with the original indices of the unknowns its
/// coefficients refer to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EmittedConstraint {
    pub params: Vec<usize>,
    pub constraint: LinearConstraint,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub result: Result<Vec<FieldElement>, SolveFailure>,
    pub stats: InnerStats,
    pub constraints: Vec<EmittedConstraint>,
    /// Sum of the per-constraint state budgets actually granted.
    pub budget: u64,
    pub comparisons: u64,
    pub discrepancies: u64,
    pub trace: Vec<String>,
}

struct Substitution {
    pivot: usize,
    /// `v_pivot = offset - Σ_{j != pivot} ratio_j v_j`, indices are original.
    offset: FieldElement,
    ratios: Vec<(usize, FieldElement)>,
}

/// Recover all unknowns, one linear constraint per recursion level.
pub fn solve(source: &dyn LevelSetSource, cfg: &SolveConfig, rng: &mut RngStream) -> Result<SolveReport, HpgpError> {
    let model = source.model();
    let k = model.field().clone();
    let binom = cfg.binomials.clone().unwrap_or_else(|| BinomialTable::new(k.p(), model.degree()));
    let mut ctx = SimContext::new(&k, cfg.backend).with_dense_cap(cfg.dense_cap);
    if cfg.trace {
        ctx = ctx.with_trace();
    }
    let mut red = Reduced::new(model);
    let mut stats = InnerStats::default();
    let mut constraints = Vec::new();
    let mut subs: Vec<Substitution> = Vec::new();
    let mut budget = 0;

    let finish = |ctx: &mut SimContext, result, stats, constraints, budget| SolveReport {
        result,
        stats,
        constraints,
        budget,
        comparisons: ctx.comparisons(),
        discrepancies: ctx.discrepancies(),
        trace: ctx.take_trace(),
    };

    let last = loop {
        let plan = match red.plan(k.p()) {
            Ok(p) => p,
            Err(HpgpError::InvalidInstance(_)) => {
                return Ok(finish(&mut ctx, Err(SolveFailure::Degenerate), stats, constraints, budget));
            }
            Err(e) => return Err(e),
        };
        let b = plan.tree * cfg.multiplier;
        budget += b;
        let Some(c) = inner_procedure(source, &red, &plan, &mut ctx, b, &binom, &mut stats, rng)? else {
            let index = constraints.len();
            return Ok(finish(&mut ctx, Err(SolveFailure::Budget { index }), stats, constraints, budget));
        };
        constraints.push(EmittedConstraint { params: red.params.clone(), constraint: c.clone() });
        let pivot = c.alpha.iter().rposition(|a| !a.is_zero()).expect("constraint is nontrivial");
        let inv = k.inv(c.alpha[pivot]).expect("pivot is nonzero");
        let offset = k.mul(c.beta, inv);
        if red.r() == 1 {
            break (red.params[0], offset);
        }
        let ratios: Vec<FieldElement> = c.alpha.iter().map(|&a| k.mul(a, inv)).collect();
        for (i, rows) in red.a.iter_mut().enumerate() {
            let col: Vec<FieldElement> = rows.iter().map(|row| row[pivot]).collect();
            let shift = UniPoly::new(col.iter().map(|&e| k.mul(offset, e)).collect());
            red.shift[i] = red.shift[i].add(&k, &shift);
            for (row, &ap) in rows.iter_mut().zip(&col) {
                for (j, e) in row.iter_mut().enumerate() {
                    *e = k.sub(*e, k.mul(ratios[j], ap));
                }
                row.remove(pivot);
            }
        }
        subs.push(Substitution {
            pivot: red.params[pivot],
            offset,
            ratios: red.params.iter().zip(&ratios).filter(|(_, r)| !r.is_zero()).map(|(&j, &r)| (j, r)).collect(),
        });
        red.params.remove(pivot);
    };

    let mut v = vec![FieldElement::ZERO; model.r()];
    v[last.0] = last.1;
    for s in subs.iter().rev() {
        let rest = k.sum(s.ratios.iter().filter(|(j, _)| *j != s.pivot).map(|&(j, r)| k.mul(r, v[j])));
        v[s.pivot] = k.sub(s.offset, rest);
    }
    Ok(finish(&mut ctx, Ok(v), stats, constraints, budget))
}

//! Static elimination schedule computed from generic coefficient supports.
//!
//! A support is the set of degrees at which `Y_{j,s}` can be nonzero for a
//! random measurement history. Each step is chosen from the supports alone,
//! so the group tree of one constraint extraction is fixed in advance.

use super::table::{is_p_power, log_p, split_p_power, BinomialTable};
use super::HpgpError;
use crate::field::FieldElement;
use serde::Serialize;
use std::collections::BTreeSet;

pub type Supports = Vec<BTreeSet<usize>>;

/// Eliminate `Y_{j0,n}` with `n = p^beta * b` using `ell = n + 1` states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NonPStep {
    pub j0: usize,
    pub n: usize,
    pub beta: u32,
    pub b: u64,
    pub ell: usize,
    /// Controls of the input layer.
    pub controls: Vec<usize>,
}

/// Eliminate `Z_{j0,t}` from a pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PPowerStep {
    pub j0: usize,
    pub t: usize,
    pub controls: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InnerPlan {
    pub general: Vec<NonPStep>,
    pub ppower: Vec<PPowerStep>,
    /// Controls after the last general step and after the last p-power step.
    pub general_out: Vec<usize>,
    pub ppower_out: Vec<usize>,
    /// The single p-power index left at the root.
    pub final_t: usize,
    /// Parameters whose coefficient survives at the root.
    pub final_support: Vec<usize>,
    /// Level-set states consumed by one pass through the tree.
    pub tree: u64,
}

/// Degrees `s` with some `a_{isj} != 0`, per parameter `j`.
pub fn supports_of(a: &[Vec<Vec<FieldElement>>], r: usize) -> Supports {
    let mut out = vec![BTreeSet::new(); r];
    for rows in a {
        for (s, row) in rows.iter().enumerate().skip(1) {
            for (j, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    out[j].insert(s);
                }
            }
        }
    }
    out
}

fn general_control(p: u64, s: &BTreeSet<usize>) -> usize {
    s.iter().rev().copied().find(|&d| d > 1 && !is_p_power(p, d as u64)).unwrap_or(1)
}

/// Degrees reachable from `s` by the shear: `k` with `C(d, k) != 0 mod p`
/// for some `d >= k` in `s`.
fn shear_closure(binom: &BinomialTable, s: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for &d in s {
        for k in 1..=d {
            if binom.get(d, k) != 0 {
                out.insert(k);
            }
        }
    }
    out
}

pub fn plan_inner(p: u64, degree: usize, supports: &Supports) -> Result<InnerPlan, HpgpError> {
    if supports.iter().all(|s| s.is_empty()) {
        return Err(HpgpError::InvalidInstance("no parameter appears in the hidden function".into()));
    }
    let binom = BinomialTable::new(p, degree);
    let mut sup = supports.clone();
    let mut tree: u64 = 1;
    let mut general = Vec::new();
    loop {
        let controls: Vec<usize> = sup.iter().map(|s| general_control(p, s)).collect();
        let Some(j0) = controls.iter().position(|&n| n > 1) else { break };
        let n = controls[j0];
        let (beta, b) = split_p_power(p, n as u64);
        general.push(NonPStep { j0, n, beta, b, ell: n + 1, controls });
        tree *= (n + 1) as u64;
        sup = sup.iter().map(|s| shear_closure(&binom, s)).collect();
        sup[j0].remove(&n);
    }
    let general_out: Vec<usize> = sup.iter().map(|s| general_control(p, s)).collect();

    let mut ts: Vec<BTreeSet<usize>> = sup
        .iter()
        .map(|s| {
            debug_assert!(s.iter().all(|&d| is_p_power(p, d as u64)));
            s.iter().map(|&d| log_p(p, d as u64)).collect()
        })
        .collect();
    let mut ppower = Vec::new();
    loop {
        let all: BTreeSet<usize> = ts.iter().flatten().copied().collect();
        if all.len() <= 1 {
            break;
        }
        let controls: Vec<usize> = ts.iter().map(|t| t.iter().next_back().copied().unwrap_or(0)).collect();
        let j0 = controls.iter().position(|&n| n > 0).expect("several degrees imply a positive control");
        let t = controls[j0];
        ppower.push(PPowerStep { j0, t, controls });
        tree *= 2;
        ts[j0].remove(&t);
    }
    let ppower_out: Vec<usize> = ts.iter().map(|t| t.iter().next_back().copied().unwrap_or(0)).collect();
    let all: BTreeSet<usize> = ts.iter().flatten().copied().collect();
    let final_t = *all.iter().next().ok_or_else(|| HpgpError::Internal("empty support at the root".into()))?;
    let final_support = (0..ts.len()).filter(|&j| ts[j].contains(&final_t)).collect();
    Ok(InnerPlan { general, ppower, general_out, ppower_out, final_t, final_support, tree })
}

/// Worst-case level-set states for the whole outer recursion, assuming the
/// generic pivot (the largest surviving parameter) at every level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateBudget {
    pub per_constraint: Vec<u64>,
    pub multiplier: u64,
}

impl StateBudget {
    /// Tree size of the first constraint extraction.
    pub fn first(&self) -> u64 {
        self.per_constraint[0]
    }

    /// Sum of tree sizes over all constraints.
    pub fn total(&self) -> u64 {
        self.per_constraint.iter().sum()
    }

    /// States one attempt at the first constraint may request.
    pub fn attempt(&self) -> u64 {
        self.first() * self.multiplier
    }

    pub fn total_with_retries(&self) -> u64 {
        self.total() * self.multiplier
    }
}

pub const DEFAULT_MULTIPLIER: u64 = 3;

pub fn plan_state_budget(model: &super::HiddenModel, multiplier: u64) -> Result<StateBudget, HpgpError> {
    let p = model.field().p();
    let mut sup = supports_of(model.tensor(), model.r());
    let mut per_constraint = Vec::new();
    while !sup.is_empty() {
        let plan = plan_inner(p, model.degree(), &sup)?;
        per_constraint.push(plan.tree);
        let pivot = *plan.final_support.last().expect("root support is nonempty");
        let pivot_sup = sup[pivot].clone();
        for &j in &plan.final_support {
            let extra: Vec<usize> = pivot_sup.iter().copied().collect();
            sup[j].extend(extra);
        }
        sup.remove(pivot);
    }
    Ok(StateBudget { per_constraint, multiplier })
}

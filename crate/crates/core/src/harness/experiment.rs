use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, ProblemKind};
use crate::field::{FieldParams, UniPoly};
use crate::hpgp::{
    plan_state_budget, solve, HiddenInstance, HiddenModel, HpgpError, InnerStats, LevelSetSource, SolveConfig,
};
use crate::hpp::{self, HppConfig, HppError, OracleSpec};
use crate::rng::RngStream;
use rand::RngCore;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trial {trial}: {msg}")]
    Invariant { trial: u64, msg: String },
}

impl HarnessError {
    /// 1 for invariant failures, 2 for configuration problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Invariant { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Wrong,
    FailedBudget,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Wrong => "wrong",
            Outcome::FailedBudget => "failed-budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: u64,
    pub field: String,
    pub outcome: Outcome,
    pub states: u64,
    /// States the solver was allowed across the constraints it attempted.
    pub budget: u64,
    /// Planner total for the whole solve, times the multiplier.
    pub planned: u64,
    pub rejected_initial: u64,
    pub schwartz_zippel: u64,
    pub ppower_ratio: u64,
    pub diag_budget: u64,
    pub rounds: u64,
    pub comparisons: u64,
    pub discrepancies: u64,
    pub wall_ms: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<String>,
}

impl TrialReport {
    fn new(trial: u64, field: &FieldParams, outcome: Outcome, stats: &InnerStats) -> Self {
        TrialReport {
            trial,
            field: field.spec_string(),
            outcome,
            states: stats.states_consumed,
            budget: 0,
            planned: 0,
            rejected_initial: stats.rejected_initial,
            schwartz_zippel: stats.schwartz_zippel,
            ppower_ratio: stats.ppower_ratio,
            diag_budget: stats.diag_budget,
            rounds: 1,
            comparisons: 0,
            discrepancies: 0,
            wall_ms: None,
            trace: Vec::new(),
        }
    }
}

/// A planted model for one trial of the graph problem.
pub fn planted_instance(cfg: &ExperimentConfig, k: &FieldParams, rng: &mut RngStream) -> Result<HiddenInstance, HpgpError> {
    let model = match (cfg.kind, cfg.r) {
        (ProblemKind::Hpgp, None) => HiddenModel::univariate(k, cfg.degree)?,
        (ProblemKind::HpgpMulti, None) => HiddenModel::multi(k, cfg.m, cfg.degree)?,
        (_, r) => HiddenModel::random(k, cfg.outputs(), r.unwrap_or(cfg.degree), cfg.degree, rng)?,
    };
    Ok(HiddenInstance::random(model, rng))
}

/// `g(y) = y^{D'}`.
pub fn monomial_g(k: &FieldParams, d: usize) -> UniPoly {
    UniPoly::monomial(k.one(), d)
}

/// Run trial number `trial` on field `k`. Everything random is drawn from
/// the stream `(seed, trial)`.
pub fn run_trial(cfg: &ExperimentConfig, k: &FieldParams, trial: u64) -> Result<TrialReport, HarnessError> {
    let start = Instant::now();
    let mut rng = RngStream::derive(cfg.seed, trial);
    let inv = |msg: String| HarnessError::Invariant { trial, msg };
    let mut rep = match cfg.kind {
        ProblemKind::Hpgp | ProblemKind::HpgpMulti => {
            let inst = planted_instance(cfg, k, &mut rng).map_err(|e| inv(e.to_string()))?;
            let planned = plan_state_budget(inst.model(), cfg.multiplier).map_err(|e| inv(e.to_string()))?;
            let scfg = SolveConfig { backend: cfg.backend.into(), multiplier: cfg.multiplier, trace: cfg.trace, ..Default::default() };
            let r = solve(&inst, &scfg, &mut rng).map_err(|e| inv(e.to_string()))?;
            for c in &r.constraints {
                if !inst.satisfies(&c.params, &c.constraint) {
                    return Err(inv(format!("constraint {:?} violated by the planted parameters", c.constraint)));
                }
            }
            if r.stats.states_consumed > r.budget {
                return Err(inv(format!("consumed {} states with a budget of {}", r.stats.states_consumed, r.budget)));
            }
            let outcome = match &r.result {
                Ok(v) if v.as_slice() == inst.secret() => Outcome::Success,
                Ok(_) => Outcome::Wrong,
                Err(_) => Outcome::FailedBudget,
            };
            let mut t = TrialReport::new(trial, k, outcome, &r.stats);
            t.budget = r.budget;
            t.planned = planned.total_with_retries();
            t.comparisons = r.comparisons;
            t.discrepancies = r.discrepancies;
            t.trace = r.trace;
            t
        }
        ProblemKind::Hpp => {
            let g = monomial_g(k, cfg.g_degree);
            let (fs, es) = (rng.next_u64(), rng.next_u64());
            let spec = OracleSpec::random(k, g, cfg.degree, fs, es).map_err(|e| inv(e.to_string()))?;
            let hcfg = HppConfig { rounds: cfg.rounds, multiplier: cfg.multiplier, ..Default::default() };
            let r = hpp::solve_hpp(&spec, &hcfg, &mut rng).map_err(|e: HppError| inv(e.to_string()))?;
            let outcome = match &r.f {
                Some(f) if f == spec.secret() => Outcome::Success,
                Some(_) => Outcome::Wrong,
                None => Outcome::FailedBudget,
            };
            let mut t = TrialReport::new(trial, k, outcome, &r.stats);
            let model = HiddenModel::univariate(k, cfg.degree).map_err(|e| inv(e.to_string()))?;
            t.planned = plan_state_budget(&model, cfg.multiplier).map_err(|e| inv(e.to_string()))?.total_with_retries()
                * cfg.rounds as u64;
            t.budget = t.planned;
            t.rounds = r.rounds_used as u64;
            t
        }
    };
    if cfg.record_timing {
        rep.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialReport>,
}

/// All trials over the field grid. Trial ids run field by field, so the
/// `i`-th trial on the `f`-th field has id `f * trials + i`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let fields = cfg.validate()?;
    let jobs: Vec<(u64, &FieldParams)> = fields
        .iter()
        .enumerate()
        .flat_map(|(fi, k)| (0..cfg.trials).map(move |i| (fi as u64 * cfg.trials + i, k)))
        .collect();
    let trials = jobs.par_iter().map(|&(id, k)| run_trial(cfg, k, id)).collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentReport { config: cfg.clone(), trials })
}

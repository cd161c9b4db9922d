//! Phase-linearization solver for hidden polynomial graph problems.
//!
//! Level-set states `Σ_x |w + f(x)⟩|x⟩` are Fourier sampled into phase
//! states `Σ_x ω^{Tr(Σ_j v_j Σ_s Y_{js} x^s)}|x⟩`; groups of these are
//! combined with a shear until only a single monomial is left, which gives a
//! linear constraint on the unknowns `v`. The outer loop substitutes each
//! constraint back and recurses on one fewer unknown.

mod inner;
mod instance;
pub mod plan;
mod solve;
pub mod stages;
pub mod table;

pub use inner::{inner_procedure, shifted_state, Reduced};
pub use instance::{element_from_json, element_to_json, HiddenInstance, HiddenModel, LevelSetSource};
pub use plan::{plan_inner, plan_state_budget, InnerPlan, StateBudget, DEFAULT_MULTIPLIER};
pub use solve::{solve, EmittedConstraint, SolveConfig, SolveFailure, SolveReport};
pub use table::{BinomialTable, CoeffTable, Stage};

use crate::field::FieldElement;
use crate::statesim::StateError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HpgpError {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("state simulation: {0}")]
    State(#[from] StateError),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// `Σ_j alpha_j v_j = beta`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearConstraint {
    pub alpha: Vec<FieldElement>,
    pub beta: FieldElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortCause {
    /// Every `Y_{js}` of a fresh state was zero.
    RejectedInitial,
    /// A general-stage step wiped out all coefficients up to the controls.
    SchwartzZippel,
    /// The pair in a p-power step had proportional coefficients.
    PPowerRatio,
    /// The diagonal-form solver gave up.
    DiagBudget,
}

impl AbortCause {
    pub const ALL: [AbortCause; 4] =
        [AbortCause::RejectedInitial, AbortCause::SchwartzZippel, AbortCause::PPowerRatio, AbortCause::DiagBudget];

    pub fn name(self) -> &'static str {
        match self {
            AbortCause::RejectedInitial => "rejected-initial",
            AbortCause::SchwartzZippel => "schwartz-zippel",
            AbortCause::PPowerRatio => "ppower-ratio",
            AbortCause::DiagBudget => "diag-budget",
        }
    }
}

/// Counters accumulated across inner procedures.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InnerStats {
    pub states_consumed: u64,
    pub rejected_initial: u64,
    pub schwartz_zippel: u64,
    pub ppower_ratio: u64,
    pub diag_budget: u64,
    /// General-stage steps attempted with a full group.
    pub nonp_steps: u64,
    /// p-power steps attempted with a full pair.
    pub ppower_steps: u64,
    pub passthroughs: u64,
}

impl InnerStats {
    pub fn count_abort(&mut self, cause: AbortCause) {
        match cause {
            AbortCause::RejectedInitial => self.rejected_initial += 1,
            AbortCause::SchwartzZippel => self.schwartz_zippel += 1,
            AbortCause::PPowerRatio => self.ppower_ratio += 1,
            AbortCause::DiagBudget => self.diag_budget += 1,
        }
    }

    pub fn aborts(&self, cause: AbortCause) -> u64 {
        match cause {
            AbortCause::RejectedInitial => self.rejected_initial,
            AbortCause::SchwartzZippel => self.schwartz_zippel,
            AbortCause::PPowerRatio => self.ppower_ratio,
            AbortCause::DiagBudget => self.diag_budget,
        }
    }

    pub fn merge(&mut self, o: &InnerStats) {
        self.states_consumed += o.states_consumed;
        self.rejected_initial += o.rejected_initial;
        self.schwartz_zippel += o.schwartz_zippel;
        self.ppower_ratio += o.ppower_ratio;
        self.diag_budget += o.diag_budget;
        self.nonp_steps += o.nonp_steps;
        self.ppower_steps += o.ppower_steps;
        self.passthroughs += o.passthroughs;
    }
}

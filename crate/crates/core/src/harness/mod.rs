//! Experiment configuration, Monte Carlo trials, reports and the self-test.

pub mod config;
pub mod experiment;
pub mod report;
pub mod selftest;

pub use config::{BackendChoice, ConfigError, ExperimentConfig, OutputFormat, Overrides, ProblemKind};
pub use experiment::{run_experiment, run_trial, ExperimentReport, HarnessError, Outcome, TrialReport};
pub use report::{aggregate, render, summary, wilson, FieldAggregate};
pub use selftest::{selftest, CheckResult, SelftestOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[cfg(test)]
mod tests;

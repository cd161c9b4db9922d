use serde::Serialize;
use serde_json::json;

use super::config::OutputFormat;
use super::experiment::{ExperimentReport, Outcome, TrialReport};
use super::SCHEMA_VERSION;

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldAggregate {
    pub field: String,
    pub trials: u64,
    pub success: u64,
    pub wrong: u64,
    pub failed_budget: u64,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_states: f64,
    pub rejected_initial: u64,
    pub schwartz_zippel: u64,
    pub ppower_ratio: u64,
    pub diag_budget: u64,
    pub discrepancies: u64,
}

/// One aggregate per field, in the order fields first appear.
pub fn aggregate(trials: &[TrialReport]) -> Vec<FieldAggregate> {
    let mut order: Vec<String> = Vec::new();
    for t in trials {
        if !order.contains(&t.field) {
            order.push(t.field.clone());
        }
    }
    order
        .into_iter()
        .map(|field| {
            let ts: Vec<&TrialReport> = trials.iter().filter(|t| t.field == field).collect();
            let n = ts.len() as u64;
            let count = |o: Outcome| ts.iter().filter(|t| t.outcome == o).count() as u64;
            let sum = |f: fn(&TrialReport) -> u64| ts.iter().map(|t| f(t)).sum::<u64>();
            let success = count(Outcome::Success);
            let (lo, hi) = wilson(success, n, 1.96);
            FieldAggregate {
                field,
                trials: n,
                success,
                wrong: count(Outcome::Wrong),
                failed_budget: count(Outcome::FailedBudget),
                success_rate: success as f64 / n as f64,
                wilson_low: lo,
                wilson_high: hi,
                mean_states: sum(|t| t.states) as f64 / n as f64,
                rejected_initial: sum(|t| t.rejected_initial),
                schwartz_zippel: sum(|t| t.schwartz_zippel),
                ppower_ratio: sum(|t| t.ppower_ratio),
                diag_budget: sum(|t| t.diag_budget),
                discrepancies: sum(|t| t.discrepancies),
            }
        })
        .collect()
}

/// The fixed CSV columns, in order.
pub const CSV_COLUMNS: [&str; 17] = [
    "schema_version",
    "trial",
    "kind",
    "field",
    "degree",
    "outcome",
    "states",
    "budget",
    "planned",
    "rejected_initial",
    "schwartz_zippel",
    "ppower_ratio",
    "diag_budget",
    "rounds",
    "comparisons",
    "discrepancies",
    "wall_ms",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    trial: u64,
    kind: &'a str,
    field: &'a str,
    degree: usize,
    outcome: &'a str,
    states: u64,
    budget: u64,
    planned: u64,
    rejected_initial: u64,
    schwartz_zippel: u64,
    ppower_ratio: u64,
    diag_budget: u64,
    rounds: u64,
    comparisons: u64,
    discrepancies: u64,
    wall_ms: Option<f64>,
}

pub fn to_csv(report: &ExperimentReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for t in &report.trials {
        w.serialize(CsvRow {
            schema_version: SCHEMA_VERSION,
            trial: t.trial,
            kind: report.config.kind.name(),
            field: &t.field,
            degree: report.config.degree,
            outcome: t.outcome.name(),
            states: t.states,
            budget: t.budget,
            planned: t.planned,
            rejected_initial: t.rejected_initial,
            schwartz_zippel: t.schwartz_zippel,
            ppower_ratio: t.ppower_ratio,
            diag_budget: t.diag_budget,
            rounds: t.rounds,
            comparisons: t.comparisons,
            discrepancies: t.discrepancies,
            wall_ms: t.wall_ms,
        })
        .expect("writing to memory");
    }
    if report.trials.is_empty() {
        w.write_record(CSV_COLUMNS).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

pub fn to_json(report: &ExperimentReport) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "config": report.config,
        "trials": report.trials,
        "aggregate": aggregate(&report.trials),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
    s.push('\n');
    s
}

pub fn render(report: &ExperimentReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => to_csv(report),
        OutputFormat::Json => to_json(report),
    }
}

/// Human-readable aggregate lines.
pub fn summary(report: &ExperimentReport) -> String {
    let mut out = String::new();
    for a in aggregate(&report.trials) {
        out.push_str(&format!(
            "F_{}: {}/{} success ({:.3}, 95% CI [{:.3}, {:.3}]), wrong {}, failed {}, mean states {:.1}, aborts: rejected-initial {} schwartz-zippel {} ppower-ratio {} diag-budget {}, discrepancies {}\n",
            a.field,
            a.success,
            a.trials,
            a.success_rate,
            a.wilson_low,
            a.wilson_high,
            a.wrong,
            a.failed_budget,
            a.mean_states,
            a.rejected_initial,
            a.schwartz_zippel,
            a.ppower_ratio,
            a.diag_budget,
            a.discrepancies
        ));
    }
    out
}

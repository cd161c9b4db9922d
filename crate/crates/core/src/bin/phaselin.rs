use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use phaselin::harness::{
    self, run_experiment, BackendChoice, ExperimentConfig, OutputFormat, Overrides, ProblemKind, SelftestOptions,
};
use phaselin::hpgp::{
    element_to_json, solve, HiddenInstance, HiddenModel, LevelSetSource, SolveConfig, DEFAULT_MULTIPLIER,
};
use phaselin::hpp::{self, HppConfig, OracleSpec};
use phaselin::{FieldParams, RngStream, UniPoly};

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "phaselin", version, about = "Phase-linearization solvers for hidden polynomial problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Recover the hidden parameters of one graph-problem instance.
    SolveHpgp(SolveHpgpArgs),
    /// Recover f from an oracle for g(y) - f(x).
    SolveHpp(SolveHppArgs),
    /// Run seeded Monte Carlo trials and write a report.
    Experiment(ExperimentArgs),
    /// Run the invariant suite at fixed seeds.
    Selftest {
        /// Use a wrong binomial table (the suite must then fail).
        #[arg(long, hide = true)]
        corrupt_binomials: bool,
    },
}

#[derive(Args)]
struct SolveHpgpArgs {
    /// Instance file with `field`, `a` and optionally `v`.
    #[arg(long, conflicts_with_all = ["field", "degree", "m", "r"])]
    instance: Option<PathBuf>,
    #[arg(long, default_value = "7")]
    field: String,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    /// Number of polynomials; more than one uses a random tensor.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Number of unknowns; setting it uses a random tensor.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "phase", value_parser = kebab::<BackendChoice>)]
    backend: BackendChoice,
    #[arg(long, default_value_t = DEFAULT_MULTIPLIER)]
    multiplier: u64,
    /// Print the per-operation trace.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct SolveHppArgs {
    /// Oracle file with `field`, `g`, `f` or `f_seed`, `degree`, `encoding_seed`.
    #[arg(long, conflicts_with_all = ["field", "g", "degree", "f_seed", "encoding_seed"])]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "13")]
    field: String,
    /// Coefficients of g from the constant term up.
    #[arg(long, default_value = "0,0,1", value_delimiter = ',', allow_hyphen_values = true)]
    g: Vec<i64>,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 1)]
    f_seed: u64,
    #[arg(long, default_value_t = 2)]
    encoding_seed: u64,
    #[arg(long, default_value_t = hpp::DEFAULT_ROUNDS)]
    rounds: usize,
    #[arg(long, default_value_t = DEFAULT_MULTIPLIER)]
    multiplier: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Field spec; repeat for a grid.
    #[arg(long = "field")]
    fields: Vec<String>,
    #[arg(long, value_parser = kebab::<ProblemKind>)]
    kind: Option<ProblemKind>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    g_degree: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    multiplier: Option<u64>,
    #[arg(long, value_parser = kebab::<BackendChoice>)]
    backend: Option<BackendChoice>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, value_parser = kebab::<OutputFormat>)]
    format: Option<OutputFormat>,
    /// Keep per-trial operation traces (JSON output only).
    #[arg(long)]
    trace: bool,
    /// Fill the wall_ms column.
    #[arg(long)]
    record_timing: bool,
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn config_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_CONFIG)
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn solve_hpgp(a: SolveHpgpArgs) -> ExitCode {
    let mut rng = RngStream::seed_from(a.seed);
    let inst = match &a.instance {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return config_error(format!("{}: {e}", path.display())),
            };
            HiddenInstance::from_json(&text, &mut rng)
        }
        None => FieldParams::parse(&a.field)
            .map_err(|e| phaselin::hpgp::HpgpError::InvalidInstance(e.to_string()))
            .and_then(|k| match (a.m, a.r) {
                (1, None) => HiddenModel::univariate(&k, a.degree),
                (m, r) => HiddenModel::random(&k, m, r.unwrap_or(a.degree * m), a.degree, &mut rng),
            })
            .map(|model| HiddenInstance::random(model, &mut rng)),
    };
    let inst = match inst {
        Ok(i) => i,
        Err(e) => return config_error(e),
    };
    let cfg = SolveConfig { backend: a.backend.into(), multiplier: a.multiplier, trace: a.trace, ..Default::default() };
    let r = match solve(&inst, &cfg, &mut rng) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("invariant failure: {e}");
            return ExitCode::from(EXIT_INVARIANT);
        }
    };
    let k = inst.model().field().clone();
    let el = |e: &phaselin::FieldElement| element_to_json(&k, *e);
    let exact = r.constraints.iter().all(|c| inst.satisfies(&c.params, &c.constraint));
    let out = json!({
        "field": k.spec_string(),
        "result": match &r.result {
            Ok(v) => json!({ "v": v.iter().map(el).collect::<Vec<_>>() }),
            Err(f) => json!({ "failure": f }),
        },
        "matches_planted": r.result.as_ref().is_ok_and(|v| v.as_slice() == inst.secret()),
        "constraints": r.constraints.iter().map(|c| json!({
            "params": c.params,
            "alpha": c.constraint.alpha.iter().map(el).collect::<Vec<_>>(),
            "beta": el(&c.constraint.beta),
        })).collect::<Vec<_>>(),
        "stats": r.stats,
        "budget": r.budget,
        "comparisons": r.comparisons,
        "discrepancies": r.discrepancies,
    });
    print_json(&out);
    if a.trace {
        for line in &r.trace {
            eprintln!("{line}");
        }
    }
    if !exact || r.discrepancies > 0 {
        eprintln!("invariant failure: inexact constraint or backend discrepancy");
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}

fn solve_hpp(a: SolveHppArgs) -> ExitCode {
    let spec = match &a.spec {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => OracleSpec::from_json(&t),
            Err(e) => return config_error(format!("{}: {e}", path.display())),
        },
        None => match FieldParams::parse(&a.field) {
            Ok(k) => {
                let g = UniPoly::from_ints(&k, &a.g);
                OracleSpec::random(&k, g, a.degree, a.f_seed, a.encoding_seed)
            }
            Err(e) => return config_error(e),
        },
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => return config_error(e),
    };
    let mut rng = RngStream::seed_from(a.seed);
    let cfg = HppConfig { rounds: a.rounds, multiplier: a.multiplier, ..Default::default() };
    let r = match hpp::solve_hpp(&spec, &cfg, &mut rng) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("invariant failure: {e}");
            return ExitCode::from(EXIT_INVARIANT);
        }
    };
    let k = spec.field();
    let list = |p: &UniPoly| p.coeffs().iter().map(|&c| element_to_json(k, c)).collect::<Vec<_>>();
    print_json(&json!({
        "field": k.spec_string(),
        "f": r.f.as_ref().map(list),
        "matches_planted": r.f.as_ref() == Some(spec.secret()),
        "rounds_used": r.rounds_used,
        "solver_failures": r.solver_failures,
        "rejected_guesses": r.rejected_guesses,
        "stats": r.stats,
    }));
    if r.f.as_ref().is_some_and(|f| !hpp::same_up_to_constant(k, f, spec.secret())) {
        eprintln!("invariant failure: the oracle accepted a wrong polynomial");
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}

fn experiment(a: ExperimentArgs) -> ExitCode {
    let mut cfg = match &a.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => return config_error(e),
        },
        None => ExperimentConfig::default(),
    };
    cfg.apply(Overrides {
        fields: (!a.fields.is_empty()).then_some(a.fields),
        kind: a.kind,
        degree: a.degree,
        g_degree: a.g_degree,
        m: a.m,
        r: a.r,
        trials: a.trials,
        seed: a.seed,
        multiplier: a.multiplier,
        backend: a.backend,
        rounds: a.rounds,
        out: a.out,
        format: a.format,
        trace: a.trace,
        record_timing: a.record_timing,
    });
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let text = harness::render(&report, cfg.format);
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                return config_error(format!("{}: {e}", path.display()));
            }
            eprint!("{}", harness::summary(&report));
        }
        None => print!("{text}"),
    }
    if report.trials.iter().any(|t| t.discrepancies > 0) {
        eprintln!("invariant failure: backend discrepancies");
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}

fn selftest(corrupt_binomials: bool) -> ExitCode {
    let results = harness::selftest(&SelftestOptions { corrupt_binomials });
    let mut ok = true;
    for c in &results {
        println!("{} {:<22} {:>6} ms  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.ms, c.detail);
        ok &= c.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::SolveHpgp(a) => solve_hpgp(a),
        Cmd::SolveHpp(a) => solve_hpp(a),
        Cmd::Experiment(a) => experiment(a),
        Cmd::Selftest { corrupt_binomials } => selftest(corrupt_binomials),
    }
}

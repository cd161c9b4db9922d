use super::*;

fn cfg(fields: &[&str], trials: u64) -> ExperimentConfig {
    ExperimentConfig { fields: fields.iter().map(|s| s.to_string()).collect(), trials, seed: 7, ..Default::default() }
}

#[test]
fn wilson_matches_reference_values() {
    let (lo, hi) = wilson(0, 10, 1.96);
    assert!(lo == 0.0 && (hi - 0.2775).abs() < 1e-4);
    let (lo, hi) = wilson(5, 10, 1.96);
    assert!((lo - 0.2366).abs() < 1e-4 && (hi - 0.7634).abs() < 1e-4);
    let (lo, hi) = wilson(95, 100, 1.96);
    assert!((lo - 0.8882).abs() < 1e-4 && (hi - 0.9785).abs() < 1e-4);
}

#[test]
fn config_parsing_and_overrides() {
    let c = ExperimentConfig::from_json(
        r#"{"fields":["13","2^3"],"kind":"hpgp-multi","degree":3,"m":2,"r":3,"trials":5,"backend":"cross-check"}"#,
    )
    .unwrap();
    assert_eq!(c.kind, ProblemKind::HpgpMulti);
    assert_eq!(c.backend, BackendChoice::CrossCheck);
    assert_eq!(c.unknowns(), 3);
    assert!(matches!(ExperimentConfig::from_json(r#"{"trails":5}"#), Err(ConfigError::Parse(_))));

    let mut c = cfg(&["7"], 3);
    c.apply(Overrides { trials: Some(9), out: Some("x.json".into()), ..Default::default() });
    assert_eq!(c.trials, 9);
    assert_eq!(c.format, OutputFormat::Json);
    c.apply(Overrides { format: Some(OutputFormat::Csv), ..Default::default() });
    assert_eq!(c.format, OutputFormat::Csv);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        ExperimentConfig { trials: 0, ..cfg(&["7"], 1) },
        ExperimentConfig { fields: vec!["6".into()], ..cfg(&["7"], 1) },
        ExperimentConfig { degree: 7, ..cfg(&["7"], 1) },
        ExperimentConfig { m: 2, ..cfg(&["7"], 1) },
        ExperimentConfig { kind: ProblemKind::Hpp, fields: vec!["4099".into()], ..cfg(&["7"], 1) },
        ExperimentConfig { kind: ProblemKind::HpgpMulti, m: 5, backend: BackendChoice::Dense, ..cfg(&["101"], 1) },
    ];
    for c in bad {
        let e = run_experiment(&c).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
    }
}

#[test]
fn reports_are_reproducible() {
    let mut c = cfg(&["7", "3^2"], 30);
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    assert_eq!(report::to_csv(&a), report::to_csv(&b));
    assert_eq!(report::to_json(&a), report::to_json(&b));
    c.seed += 1;
    assert_ne!(report::to_csv(&a), report::to_csv(&run_experiment(&c).unwrap()));
}

#[test]
fn csv_schema_for_quadratic_run() {
    let r = run_experiment(&cfg(&["7"], 1000)).unwrap();
    let text = report::to_csv(&r);
    let header = text.lines().next().unwrap();
    assert_eq!(header, report::CSV_COLUMNS.join(","));
    assert_eq!(text.lines().count(), 1001);
    let agg = aggregate(&r.trials);
    assert_eq!(agg.len(), 1);
    assert_eq!(agg[0].trials, 1000);
    assert_eq!(agg[0].wrong, 0);
    assert!(agg[0].success_rate > 0.5 && agg[0].mean_states > 0.0);
    assert!(agg[0].wilson_low <= agg[0].success_rate && agg[0].success_rate <= agg[0].wilson_high);
    for t in &r.trials {
        assert!(t.states <= t.budget);
        assert!(t.wall_ms.is_none());
    }
    let json: serde_json::Value = serde_json::from_str(&report::to_json(&r)).unwrap();
    assert_eq!(json["schema_version"], SCHEMA_VERSION);
    assert_eq!(json["trials"].as_array().unwrap().len(), 1000);
    assert_eq!(json["aggregate"][0]["trials"], 1000);
}

#[test]
fn cross_check_backend_on_f5_has_no_discrepancies() {
    let c = ExperimentConfig { backend: BackendChoice::CrossCheck, degree: 3, ..cfg(&["5"], 30) };
    let r = run_experiment(&c).unwrap();
    assert!(r.trials.iter().map(|t| t.comparisons).sum::<u64>() > 0);
    assert!(r.trials.iter().all(|t| t.discrepancies == 0));
}

#[test]
fn multi_output_and_hpp_kinds_run() {
    let c = ExperimentConfig { kind: ProblemKind::HpgpMulti, m: 2, degree: 2, r: Some(3), ..cfg(&["7", "2^3"], 10) };
    let r = run_experiment(&c).unwrap();
    assert!(r.trials.iter().all(|t| t.outcome != Outcome::Wrong));
    assert!(r.trials.iter().any(|t| t.outcome == Outcome::Success));

    let c = ExperimentConfig { kind: ProblemKind::Hpp, degree: 2, g_degree: 1, ..cfg(&["7"], 5) };
    let r = run_experiment(&c).unwrap();
    assert!(r.trials.iter().all(|t| t.outcome == Outcome::Success));
}

#[test]
fn trace_and_timing_are_opt_in() {
    let c = ExperimentConfig { trace: true, record_timing: true, ..cfg(&["5"], 2) };
    let r = run_experiment(&c).unwrap();
    assert!(r.trials.iter().all(|t| !t.trace.is_empty() && t.wall_ms.is_some()));
}

#[test]
fn selftest_passes_and_negative_control_fails() {
    let ok = selftest(&SelftestOptions::default());
    for c in &ok {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
    let bad = selftest(&SelftestOptions { corrupt_binomials: true });
    let failed: Vec<&str> = bad.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    assert_eq!(failed, ["constraint-exactness"]);
}

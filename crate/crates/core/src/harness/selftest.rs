use std::time::Instant;

use rand::RngCore;
use serde::Serialize;

use super::config::{BackendChoice, ExperimentConfig, ProblemKind};
use super::experiment::run_experiment;
use super::report::to_csv;
use crate::diag::{solve_diagonal, DiagonalForm};
use crate::field::{find_roots, roots_by_evaluation, FieldParams, UniPoly};
use crate::hpgp::{solve, BinomialTable, HiddenInstance, HiddenModel, SolveConfig};
use crate::hpp::{overlap_bound_check, LevelSetStats, OracleSpec};
use crate::rng::RngStream;
use crate::statesim::Backend;

#[derive(Debug, Clone, Default)]
pub struct SelftestOptions {
    /// Negative control: hand the solver a binomial table with a wrong
    /// entry, which must make `constraint-exactness` fail.
    pub corrupt_binomials: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub ms: u64,
}

type Check = fn(&SelftestOptions) -> Result<String, String>;

const CHECKS: [(&str, Check); 7] = [
    ("field-axioms", field_axioms),
    ("root-finding", root_finding),
    ("backend-equivalence", backend_equivalence),
    ("diag-validity", diag_validity),
    ("constraint-exactness", constraint_exactness),
    ("level-set-identities", level_set_identities),
    ("reproducibility", reproducibility),
];

pub fn selftest(opts: &SelftestOptions) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let t = Instant::now();
            let r = check(opts);
            let ms = t.elapsed().as_millis() as u64;
            match r {
                Ok(detail) => CheckResult { name, passed: true, detail, ms },
                Err(detail) => CheckResult { name, passed: false, detail, ms },
            }
        })
        .collect()
}

fn field(s: &str) -> FieldParams {
    FieldParams::parse(s).expect("selftest field specs are valid")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn field_axioms(_: &SelftestOptions) -> Result<String, String> {
    let mut n = 0;
    for s in ["2^3", "3^2", "7", "2^4", "5^2", "13", "3^3"] {
        let k = field(s);
        let mut rng = RngStream::seed_from(1);
        for _ in 0..300 {
            let [a, b, c] = [0; 3].map(|_| k.random_element(&mut rng, false));
            ensure(k.add(k.add(a, b), c) == k.add(a, k.add(b, c)), || format!("F_{s}: addition is not associative"))?;
            ensure(k.mul(k.mul(a, b), c) == k.mul(a, k.mul(b, c)), || format!("F_{s}: multiplication is not associative"))?;
            ensure(k.mul(a, k.add(b, c)) == k.add(k.mul(a, b), k.mul(a, c)), || format!("F_{s}: distributivity"))?;
            ensure(k.add(a, k.neg(a)).is_zero(), || format!("F_{s}: additive inverse"))?;
            if !a.is_zero() {
                let inv = k.inv(a).map_err(|e| e.to_string())?;
                ensure(k.mul(a, inv) == k.one(), || format!("F_{s}: multiplicative inverse"))?;
            }
            ensure(k.frobenius_pow(a, k.alpha() as i64) == a, || format!("F_{s}: Frobenius order"))?;
            ensure(k.frobenius_pow(k.mul(a, b), 1) == k.mul(k.frobenius_pow(a, 1), k.frobenius_pow(b, 1)), || {
                format!("F_{s}: Frobenius is not multiplicative")
            })?;
            ensure((k.trace(a) + k.trace(b)) % k.p() == k.trace(k.add(a, b)), || format!("F_{s}: trace is not additive"))?;
            n += 1;
        }
    }
    Ok(format!("{n} random triples"))
}

fn root_finding(_: &SelftestOptions) -> Result<String, String> {
    let mut n = 0;
    for s in ["7", "2^4", "3^3", "5^2", "101"] {
        let k = field(s);
        let mut rng = RngStream::seed_from(2);
        for _ in 0..40 {
            let d = 1 + (rng.next_u32() % 5) as usize;
            let mut c: Vec<_> = (0..=d).map(|_| k.random_element(&mut rng, false)).collect();
            c[d] = k.random_element(&mut rng, true);
            let g = UniPoly::new(c);
            let z = k.random_element(&mut rng, false);
            ensure(find_roots(&k, &g, z) == roots_by_evaluation(&k, &g, z), || format!("F_{s}: roots of {}", g.format(&k)))?;
            n += 1;
        }
    }
    Ok(format!("{n} polynomials"))
}

fn backend_equivalence(_: &SelftestOptions) -> Result<String, String> {
    let mut comparisons = 0;
    for s in ["2^2", "5", "7", "3^2"] {
        let k = field(s);
        for d in 2..=3usize.min(k.q() as usize - 1) {
            let mut rng = RngStream::seed_from(3);
            for _ in 0..4 {
                let inst = HiddenInstance::random(HiddenModel::univariate(&k, d).map_err(|e| e.to_string())?, &mut rng);
                let cfg = SolveConfig { backend: Backend::CrossCheck, ..Default::default() };
                let r = solve(&inst, &cfg, &mut rng).map_err(|e| format!("F_{s} D={d}: {e}"))?;
                ensure(r.discrepancies == 0, || format!("F_{s} D={d}: {} backend discrepancies", r.discrepancies))?;
                comparisons += r.comparisons;
            }
        }
    }
    ensure(comparisons > 0, || "no comparisons were made".into())?;
    Ok(format!("{comparisons} state comparisons"))
}

fn diag_validity(_: &SelftestOptions) -> Result<String, String> {
    let mut n = 0;
    for s in ["5", "7", "2^3", "3^2", "13", "2^4", "5^2", "3^3"] {
        let k = field(s);
        let mut rng = RngStream::seed_from(4);
        for b in 1..=4u64 {
            if b % k.p() == 0 {
                continue;
            }
            for len in (b as usize + 1)..=(b as usize + 2) {
                for _ in 0..20 {
                    let coeffs = (0..len).map(|_| k.random_element(&mut rng, true)).collect();
                    let form = DiagonalForm::new(&k, b, coeffs).map_err(|e| e.to_string())?;
                    let d = solve_diagonal(&k, &form).map_err(|e| format!("F_{s} b={b} len={len}: {e}"))?;
                    ensure(d.iter().any(|x| !x.is_zero()), || format!("F_{s} b={b}: trivial solution"))?;
                    ensure(form.eval(&k, &d).is_zero(), || format!("F_{s} b={b}: solution does not vanish"))?;
                    n += 1;
                }
            }
        }
    }
    Ok(format!("{n} forms"))
}

fn constraint_exactness(opts: &SelftestOptions) -> Result<String, String> {
    let mut n = 0;
    for s in ["5", "7", "3^2", "13", "2^4", "3^3"] {
        let k = field(s);
        for d in 2..=3usize {
            let mut rng = RngStream::seed_from(5);
            let mut cfg = SolveConfig::default();
            if opts.corrupt_binomials {
                let mut t = BinomialTable::new(k.p(), d);
                t.corrupt(2, 1, t.get(2, 1) + 1);
                cfg.binomials = Some(t);
            }
            for _ in 0..10 {
                let inst = HiddenInstance::random(HiddenModel::univariate(&k, d).map_err(|e| e.to_string())?, &mut rng);
                let r = solve(&inst, &cfg, &mut rng).map_err(|e| format!("F_{s} D={d}: {e}"))?;
                for c in &r.constraints {
                    ensure(inst.satisfies(&c.params, &c.constraint), || format!("F_{s} D={d}: constraint violated"))?;
                    n += 1;
                }
                if let Ok(v) = &r.result {
                    ensure(v.as_slice() == inst.secret(), || format!("F_{s} D={d}: wrong parameters reported"))?;
                }
            }
        }
    }
    ensure(n > 0, || "no constraints were produced".into())?;
    Ok(format!("{n} constraints"))
}

fn level_set_identities(_: &SelftestOptions) -> Result<String, String> {
    let mut n = 0;
    for s in ["7", "13", "3^3", "2^5"] {
        let k = field(s);
        for g in [UniPoly::from_ints(&k, &[0, 0, 1]), UniPoly::from_ints(&k, &[0, 1, 0, 1])] {
            let spec = OracleSpec::random(&k, g, 3, 6, 6).map_err(|e| e.to_string())?;
            let st = LevelSetStats::compute(&spec);
            let q = k.q();
            ensure(st.m_f.iter().sum::<u64>() == q * q, || format!("F_{s}: level-set sizes do not sum to q²"))?;
            ensure(st.m_g.iter().all(|&c| c <= spec.g_degree() as u64), || format!("F_{s}: m_g exceeds deg g"))?;
            for w in k.elements() {
                let sum: u64 = k.elements().map(|x| st.small(k.add(spec.secret().eval(&k, x), w))).sum();
                ensure(sum == st.big(w), || format!("F_{s}: Σ_x m_g(f(x)+w) != M_F(w)"))?;
                if st.big(w) > 0 {
                    let (exact, bound) = overlap_bound_check(&spec, &st, w);
                    ensure(exact + 1e-12 >= bound, || format!("F_{s}: overlap {exact} below {bound}"))?;
                }
                n += 1;
            }
        }
    }
    Ok(format!("{n} offsets"))
}

fn reproducibility(_: &SelftestOptions) -> Result<String, String> {
    let cfg = ExperimentConfig {
        fields: vec!["7".into(), "3^2".into()],
        kind: ProblemKind::Hpgp,
        degree: 2,
        trials: 20,
        seed: 99,
        backend: BackendChoice::Phase,
        ..Default::default()
    };
    let a = to_csv(&run_experiment(&cfg).map_err(|e| e.to_string())?);
    let b = to_csv(&run_experiment(&cfg).map_err(|e| e.to_string())?);
    ensure(a == b, || "two runs with the same seed differ".into())?;
    Ok(format!("{} bytes identical", a.len()))
}

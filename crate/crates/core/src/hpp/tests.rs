use super::*;
use crate::field::roots_by_evaluation;
use crate::hpgp::HiddenInstance;

fn field(s: &str) -> FieldParams {
    FieldParams::parse(s).unwrap()
}

fn poly(k: &FieldParams, c: &[i64]) -> UniPoly {
    UniPoly::from_ints(k, c)
}

fn f7_spec() -> OracleSpec {
    let k = field("7");
    OracleSpec::new(&k, poly(&k, &[0, 0, 1]), poly(&k, &[0, 2, 0, 1]), 3, 11).unwrap()
}

/// `M_F` by counting pairs directly.
fn brute_big(spec: &OracleSpec) -> Vec<u64> {
    let k = spec.field();
    let mut out = vec![0; k.q() as usize];
    for x in k.elements() {
        for y in k.elements() {
            out[k.sub(spec.g().eval(k, y), spec.secret().eval(k, x)).index() as usize] += 1;
        }
    }
    out
}

fn value_of_token(spec: &OracleSpec, t: u64) -> FieldElement {
    spec.field().elements().find(|&w| spec.token(w) == t).unwrap()
}

#[test]
fn spec_validation() {
    let k = field("7");
    let g = poly(&k, &[0, 0, 1]);
    assert!(OracleSpec::new(&k, poly(&k, &[3]), poly(&k, &[0, 1]), 1, 0).is_err());
    assert!(OracleSpec::new(&k, g.clone(), poly(&k, &[1, 1]), 1, 0).is_err());
    assert!(OracleSpec::new(&k, g.clone(), poly(&k, &[0, 0, 0, 1]), 2, 0).is_err());
    assert!(OracleSpec::new(&k, g.clone(), poly(&k, &[0, 1]), 7, 0).is_err());
    assert!(OracleSpec::new(&k, g, poly(&k, &[0, 1]), 1, 0).is_ok());
}

#[test]
fn encoding_is_injective_and_seeded() {
    let k = field("3^3");
    let a = OracleSpec::random(&k, poly(&k, &[0, 0, 1]), 3, 1, 5).unwrap();
    let b = OracleSpec::random(&k, poly(&k, &[0, 0, 1]), 3, 1, 6).unwrap();
    let ta: HashSet<u64> = k.elements().map(|w| a.token(w)).collect();
    assert_eq!(ta.len(), 27);
    assert!(k.elements().any(|w| a.token(w) != b.token(w)));
    let c = OracleSpec::random(&k, poly(&k, &[0, 0, 1]), 3, 1, 5).unwrap();
    assert!(k.elements().all(|w| a.token(w) == c.token(w)));
    assert_eq!(a.secret(), c.secret());
    assert_eq!(a.secret().degree(), Some(3));
}

#[test]
fn tokens_match_iff_values_match() {
    let k = field("7");
    let spec = OracleSpec::new(&k, poly(&k, &[0, 0, 1]), poly(&k, &[0, 0, 0, 1]), 3, 2).unwrap();
    let table: Vec<(i64, u64)> = k
        .elements()
        .flat_map(|x| k.elements().map(move |y| (x, y)))
        .map(|(x, y)| {
            let v = (y.index() * y.index() + 7 * 7 - x.index().pow(3) % 7) % 7;
            (v as i64, oracle_query(&spec, x, y))
        })
        .collect();
    for &(v1, t1) in &table {
        for &(v2, t2) in &table {
            assert_eq!(v1 == v2, t1 == t2);
        }
    }
}

#[test]
fn roots_agree_with_evaluation() {
    for s in ["7", "13", "2^4", "3^3"] {
        let k = field(s);
        let spec = OracleSpec::random(&k, poly(&k, &[0, 1, 0, 1]), 2, 3, 4).unwrap();
        for z in k.elements() {
            assert_eq!(spec.roots_of(z), roots_by_evaluation(&k, spec.g(), z).as_slice());
        }
    }
}

#[test]
fn level_set_identities_exhaustive() {
    let fields = [
        "2", "3", "2^2", "5", "7", "2^3", "3^2", "11", "13", "2^4", "17", "19", "23", "5^2", "3^3", "29", "31", "2^5",
        "37", "41", "43", "47", "7^2", "53", "59", "61", "2^6",
    ];
    for (n, s) in fields.iter().enumerate() {
        let k = field(s);
        let d = 3.min(k.q() as usize - 1);
        for g in [poly(&k, &[0, 0, 1]), poly(&k, &[0, 1, 0, 1])] {
            let spec = OracleSpec::random(&k, g, d, n as u64, 0).unwrap();
            let st = LevelSetStats::compute(&spec);
            let dg = spec.g_degree() as u64;
            assert_eq!(st.m_f, brute_big(&spec), "{s}");
            assert_eq!(st.m_f.iter().sum::<u64>(), k.q() * k.q());
            assert!(st.m_g.iter().all(|&c| c <= dg));
            for w in k.elements() {
                let sum: u64 = k.elements().map(|x| st.small(k.add(spec.secret().eval(&k, x), w))).sum();
                assert_eq!(sum, st.big(w));
                if st.big(w) > 0 {
                    let (exact, bound) = overlap_bound_check(&spec, &st, w);
                    assert!(exact >= bound - 1e-12, "{s} w={}", k.format(w));
                }
            }
        }
    }
}

#[test]
fn phi_is_the_uniform_level_set() {
    let spec = f7_spec();
    let k = spec.field().clone();
    let st = LevelSetStats::compute(&spec);
    let mut rng = RngStream::seed_from(3);
    for _ in 0..20 {
        let (phi, t) = sample_phi_w(&spec, &mut rng).unwrap();
        let w = value_of_token(&spec, t);
        assert!((phi.norm_sqr() - 1.0).abs() < 1e-12);
        let a = 1.0 / (st.big(w) as f64).sqrt();
        for y in k.elements() {
            for x in k.elements() {
                let on = k.sub(spec.g().eval(&k, y), spec.secret().eval(&k, x)) == w;
                let amp = phi.amp_at(&[y, x]);
                assert!((amp.re - if on { a } else { 0.0 }).abs() < 1e-12 && amp.im == 0.0);
            }
        }
    }
}

#[test]
fn phi_outcomes_follow_level_set_sizes() {
    let spec = f7_spec();
    let k = spec.field().clone();
    let st = LevelSetStats::compute(&spec);
    let sampler = PhiSampler::new(&spec);
    let mut rng = RngStream::seed_from(8);
    let n = 10_000;
    let mut counts = vec![0u64; 7];
    for _ in 0..n {
        let (_, t) = sampler.sample(RegId(0), RegId(1), &mut rng);
        counts[value_of_token(&spec, t).index() as usize] += 1;
    }
    let mut chi2 = 0.0;
    let mut cells = 0;
    for w in k.elements() {
        let e = n as f64 * st.big(w) as f64 / 49.0;
        if e > 0.0 {
            chi2 += (counts[w.index() as usize] as f64 - e).powi(2) / e;
            cells += 1;
        } else {
            assert_eq!(counts[w.index() as usize], 0);
        }
    }
    // 99.9% quantile of χ² with 6 degrees of freedom
    assert!(cells <= 7 && chi2 < 22.46, "chi2 = {chi2}");
}

#[test]
fn u_g_is_identity_for_linear_g() {
    let k = field("7");
    let spec = OracleSpec::new(&k, poly(&k, &[0, 1]), poly(&k, &[0, 3, 1]), 2, 1).unwrap();
    let mut rng = RngStream::seed_from(4);
    for _ in 0..10 {
        let (phi, t) = sample_phi_w(&spec, &mut rng).unwrap();
        let w = value_of_token(&spec, t);
        let psi = apply_u_g(&spec, &phi).unwrap();
        let lam = DenseState::level_set(&k, &[RegId(0)], RegId(1), &[w], &[spec.secret().clone()], 1 << 20).unwrap();
        assert!(psi.distance_up_to_phase(&lam) < 1e-12);
        assert!(phi.distance_up_to_phase(&lam) < 1e-12);
        let st = LevelSetStats::compute(&spec);
        let (exact, bound) = overlap_bound_check(&spec, &st, w);
        assert!((exact - 1.0).abs() < 1e-12 && (bound - 1.0).abs() < 1e-12);
    }
}

#[test]
fn psi_amplitudes_and_overlap() {
    let spec = f7_spec();
    let k = spec.field().clone();
    let st = LevelSetStats::compute(&spec);
    let mut rng = RngStream::seed_from(6);
    let mut seen = HashSet::new();
    for _ in 0..200 {
        let (phi, t) = sample_phi_w(&spec, &mut rng).unwrap();
        let w = value_of_token(&spec, t);
        if !seen.insert(w) {
            continue;
        }
        let psi = apply_u_g(&spec, &phi).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-9);
        let big = st.big(w) as f64;
        for x in k.elements() {
            let u = k.add(w, spec.secret().eval(&k, x));
            let want = (st.small(u) as f64 / big).sqrt();
            for z in k.elements() {
                let amp = psi.amp_at(&[z, x]);
                let e = if z == u { want } else { 0.0 };
                assert!((amp.re - e).abs() < 1e-9 && amp.im.abs() < 1e-9);
            }
        }
        let lam = DenseState::level_set(&k, &[RegId(0)], RegId(1), &[w], &[spec.secret().clone()], 1 << 20).unwrap();
        let inner: Complex64 = psi.amps().iter().zip(lam.amps()).map(|(a, b)| a.conj() * b).sum();
        let (exact, bound) = overlap_bound_check(&spec, &st, w);
        assert!((inner.re - exact).abs() < 1e-9 && inner.im.abs() < 1e-9);
        assert!(exact >= bound);
        assert!(bound <= 1.0);
    }
    assert!(seen.len() >= 5);
}

#[test]
fn u_g_rejects_states_off_the_root_sets() {
    let spec = f7_spec();
    let k = spec.field().clone();
    let s = DenseState::basis(&k, vec![RegId(0), RegId(1)], &[k.from_int(1), k.from_int(0)], 1 << 20).unwrap();
    assert_eq!(apply_u_g(&spec, &s).unwrap_err(), HppError::OutsideImage);
    // y = 0 is the only root of y² = 0
    let s = DenseState::basis(&k, vec![RegId(0), RegId(1)], &[k.from_int(0), k.from_int(2)], 1 << 20).unwrap();
    assert!(apply_u_g(&spec, &s).is_ok());
}

#[test]
fn large_level_sets_are_common() {
    let k = field("13");
    let spec = OracleSpec::random(&k, poly(&k, &[0, 0, 1]), 3, 9, 9).unwrap();
    let st = LevelSetStats::compute(&spec);
    let sampler = PhiSampler::new(&spec);
    let mut rng = RngStream::seed_from(1);
    let n = 10_000;
    let half = k.q() as f64 / 2.0;
    let hits = (0..n)
        .filter(|_| st.big(value_of_token(&spec, sampler.sample(RegId(0), RegId(1), &mut rng).1)) as f64 >= half)
        .count() as f64;
    let p: f64 = st.m_f.iter().filter(|&&c| c as f64 >= half).map(|&c| c as f64 / 169.0).sum();
    let mean: f64 = st.m_f.iter().map(|&c| (c * c) as f64 / 169.0).sum();
    assert!(mean >= 13.0);
    assert!(p >= 0.25);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!((hits / n as f64 - p).abs() <= 4.0 * sigma);
}

#[test]
fn verify_accepts_the_planted_function_and_shifts() {
    let k = field("13");
    let spec = OracleSpec::random(&k, poly(&k, &[0, 0, 1]), 3, 2, 2).unwrap();
    let mut rng = RngStream::seed_from(2);
    for c in 0..13 {
        let f0 = spec.secret().add(&k, &UniPoly::constant(k.from_int(c)));
        assert!(verify_guess(&spec, &f0, &mut rng).unwrap());
    }
}

#[test]
fn verify_rejects_wrong_guesses() {
    let k = field("13");
    let spec = OracleSpec::random(&k, poly(&k, &[0, 0, 1]), 3, 5, 5).unwrap();
    let mut rng = RngStream::seed_from(5);
    for _ in 0..200 {
        let mut c: Vec<FieldElement> = (0..=3).map(|_| k.random_element(&mut rng, false)).collect();
        let s = 1 + (rng.next_u32() % 3) as usize;
        c[s] = k.random_element(&mut rng, true);
        let delta = UniPoly::new(c);
        let f0 = spec.secret().add(&k, &delta);
        assert!(!same_up_to_constant(&k, &f0, spec.secret()));
        assert!(!verify_guess(&spec, &f0, &mut rng).unwrap());
    }
}

#[test]
fn verify_gives_up_without_enough_solutions() {
    let k = field("5");
    let spec = OracleSpec::new(&k, poly(&k, &[0, 1]), poly(&k, &[0, 1]), 1, 0).unwrap();
    // y^4 only takes the values 0 and 1, so x + w is a value of g for two x at most
    let spec4 = OracleSpec::new(&k, poly(&k, &[0, 0, 0, 0, 1]), poly(&k, &[0, 1]), 4, 0).unwrap();
    let mut rng = RngStream::seed_from(0);
    assert!(verify_guess(&spec, &poly(&k, &[0, 1]), &mut rng).unwrap());
    let err = verify_guess_with(&spec4, &poly(&k, &[0, 1]), 20, &mut rng).unwrap_err();
    assert_eq!(err, HppError::ExhaustedSampling { attempts: 20 });
}

#[test]
fn identity_g_reduces_to_the_graph_problem() {
    let k = field("7");
    for seed in 0..10 {
        let spec = OracleSpec::random(&k, poly(&k, &[0, 1]), 2, seed, seed).unwrap();
        let mut rng = RngStream::seed_from(seed);
        let rep = solve_hpp(&spec, &HppConfig::default(), &mut rng).unwrap();
        assert_eq!(rep.f.as_ref(), Some(spec.secret()));
    }
}

#[test]
fn psi_source_matches_graph_model() {
    let k = field("7");
    let spec = OracleSpec::random(&k, poly(&k, &[0, 1]), 2, 3, 3).unwrap();
    let src = PsiSource::new(&spec).unwrap();
    assert_eq!(src.model().r(), 2);
    let inst = HiddenInstance::new(
        src.model().clone(),
        spec.secret().coeffs()[1..].to_vec(),
    )
    .unwrap();
    let mut ctx = SimContext::new(&k, Backend::Dense);
    let mut rng = RngStream::seed_from(1);
    let s = src.fresh_state(&mut ctx, &mut rng).unwrap();
    let d = s.dense().unwrap();
    let regs = d.regs().to_vec();
    assert_eq!(regs.len(), 2);
    let f = &inst.model().polys(inst.secret())[0];
    let w = k.elements().find(|&w| d.amp_at(&[w, k.zero()]).norm() > 0.0).unwrap();
    let lam = DenseState::level_set(&k, &regs[..1], regs[1], &[w], &[f.clone()], 1 << 20).unwrap();
    assert!(d.distance_up_to_phase(&lam) < 1e-12);
}

#[test]
fn quadratic_g_recovers_planted_cubic() {
    let k = field("13");
    let mut found = 0;
    for seed in 0..6 {
        let spec = OracleSpec::random(&k, poly(&k, &[0, 0, 1]), 3, seed, seed + 50).unwrap();
        let mut rng = RngStream::seed_from(seed);
        let rep = solve_hpp(&spec, &HppConfig::default(), &mut rng).unwrap();
        if let Some(f) = rep.f {
            assert_eq!(&f, spec.secret());
            found += 1;
        }
        assert!(rep.rounds_used <= DEFAULT_ROUNDS);
    }
    assert!(found >= 1);
}

#[test]
fn json_roundtrip() {
    let spec = f7_spec();
    let text = spec.to_json(11).to_string();
    let back = OracleSpec::from_json(&text).unwrap();
    assert_eq!(back.secret(), spec.secret());
    assert!(spec.field().elements().all(|w| back.token(w) == spec.token(w)));
    let seeded = OracleSpec::from_json(r#"{"field":"3^2","g":[0,0,1],"f_seed":4,"degree":2,"encoding_seed":1}"#).unwrap();
    assert_eq!(seeded.degree(), 2);
    assert!(OracleSpec::from_json(r#"{"field":"7","g":[0,0,1],"f_seed":4}"#).is_err());
    assert!(OracleSpec::from_json(r#"{"field":"7","g":[0,0,1],"f":[1,1]}"#).is_err());
}

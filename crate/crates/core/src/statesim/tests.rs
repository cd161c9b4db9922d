use super::*;
use crate::field::FieldParams;
use proptest::prelude::*;

fn field(s: &str) -> FieldParams {
    FieldParams::parse(s).unwrap()
}

fn approx(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < 1e-9
}

fn chi2_uniform(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let e = n as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

// 0.999 quantile of chi-square with 6 degrees of freedom
const CHI2_6_999: f64 = 22.458;

#[test]
fn level_set_f5_square() {
    let k = field("5");
    let mut ctx = SimContext::new(&k, Backend::CrossCheck);
    let f = UniPoly::from_ints(&k, &[0, 0, 1]);
    let s = ctx.prepare_level_set(&[k.zero()], &[f.clone()]).unwrap();
    let d = s.dense().unwrap();
    let a = 1.0 / 5f64.sqrt();
    for u in k.elements() {
        for x in k.elements() {
            let want = if u == f.eval(&k, x) { a } else { 0.0 };
            assert!(approx(d.amp_at(&[u, x]), Complex64::new(want, 0.0)));
        }
    }
    assert!((d.norm_sqr() - 1.0).abs() < 1e-9);
    assert_eq!(ctx.discrepancies(), 0);
}

#[test]
fn level_set_f7_support() {
    let k = field("7");
    let mut ctx = SimContext::new(&k, Backend::Dense);
    let f = UniPoly::from_ints(&k, &[0, 3, 5]);
    let s = ctx.prepare_level_set(&[k.from_int(2)], &[f]).unwrap();
    let d = s.dense().unwrap();
    for x in 0..7i64 {
        let u = (2 + 3 * x + 5 * x * x).rem_euclid(7);
        for v in 0..7i64 {
            let amp = d.amp_at(&[k.from_int(v), k.from_int(x)]);
            assert_eq!(amp.norm() > 0.5 / 7f64.sqrt(), v == u);
        }
    }
}

#[test]
fn qft_small_examples() {
    let k2 = field("2");
    let mut d = DenseState::basis(&k2, vec![RegId(0)], &[k2.zero()], 1 << 10).unwrap();
    d.qft(RegId(0), false).unwrap();
    let h = 1.0 / 2f64.sqrt();
    assert!(approx(d.amps()[0], Complex64::new(h, 0.0)) && approx(d.amps()[1], Complex64::new(h, 0.0)));

    let k3 = field("3");
    let mut d = DenseState::basis(&k3, vec![RegId(0)], &[k3.one()], 1 << 10).unwrap();
    d.qft(RegId(0), false).unwrap();
    let s = 1.0 / 3f64.sqrt();
    for b in 0..3 {
        assert!(approx(d.amps()[b as usize], omega_pow(&k3, b) * s));
    }
}

#[test]
fn qft_roundtrip_random_dense() {
    let k = field("5");
    let mut rng = RngStream::seed_from(8);
    for _ in 0..100 {
        let regs = vec![RegId(0), RegId(1)];
        let mut amps: Vec<Complex64> =
            (0..25).map(|_| Complex64::new(rand::Rng::gen::<f64>(&mut rng) - 0.5, rand::Rng::gen::<f64>(&mut rng) - 0.5)).collect();
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= n);
        let orig = DenseState::from_parts(k.clone(), regs, amps);
        let mut d = orig.clone();
        d.qft(RegId(1), false).unwrap();
        assert!((d.norm_sqr() - 1.0).abs() < 1e-9);
        d.qft(RegId(1), true).unwrap();
        assert!(orig.distance_up_to_phase(&d) < 1e-9);
    }
}

#[test]
fn first_measurement_uniform_and_zero_polynomial() {
    let k = field("7");
    let mut rng = RngStream::seed_from(3);
    let mut counts = [0u64; 7];
    for _ in 0..10_000 {
        let mut ctx = SimContext::new(&k, Backend::Phase);
        let f = UniPoly::from_ints(&k, &[0, 1, 4]);
        let s = ctx.prepare_level_set(&[k.from_int(3)], &[f]).unwrap();
        let u = s.regs()[0];
        let (_, recs) = ctx.fourier_measure_first(s, &[u], &mut rng).unwrap();
        counts[recs[0].outcome.index() as usize] += 1;
    }
    assert!(chi2_uniform(&counts) < CHI2_6_999, "{counts:?}");

    let mut ctx = SimContext::new(&k, Backend::CrossCheck);
    let s = ctx.prepare_level_set(&[k.from_int(5)], &[UniPoly::zero()]).unwrap();
    let u = s.regs()[0];
    let (s, _) = ctx.fourier_measure_first(s, &[u], &mut rng).unwrap();
    assert!(s.phase().unwrap().exponent().is_zero());
    assert_eq!(ctx.discrepancies(), 0);
}

#[test]
fn dense_first_measurement_uniform() {
    let k = field("7");
    let mut rng = RngStream::seed_from(31);
    let mut counts = [0u64; 7];
    let f = UniPoly::from_ints(&k, &[0, 2, 0, 1]);
    for _ in 0..10_000 {
        let mut ctx = SimContext::new(&k, Backend::Dense);
        let s = ctx.prepare_level_set(&[k.from_int(1)], &[f.clone()]).unwrap();
        let u = s.regs()[0];
        let (_, recs) = ctx.fourier_measure_first(s, &[u], &mut rng).unwrap();
        counts[recs[0].outcome.index() as usize] += 1;
    }
    assert!(chi2_uniform(&counts) < CHI2_6_999, "{counts:?}");
}

#[test]
fn append_uniform_replicates() {
    let k = field("5");
    let mut ctx = SimContext::new(&k, Backend::CrossCheck);
    let s = ctx.prepare_level_set(&[k.zero()], &[UniPoly::from_ints(&k, &[0, 1])]).unwrap();
    let u = s.regs()[0];
    let mut rng = RngStream::seed_from(1);
    let (s, _) = ctx.fourier_measure_first(s, &[u], &mut rng).unwrap();
    let before = s.dense().unwrap().clone();
    let e_before = s.phase().unwrap().exponent().clone();
    let (s, r) = ctx.append_uniform(s).unwrap();
    let d = s.dense().unwrap();
    assert_eq!(d.regs().len(), 2);
    assert_eq!(s.phase().unwrap().regs().len(), 2);
    assert_eq!(s.phase().unwrap().exponent(), &e_before);
    assert_eq!(*d.regs().last().unwrap(), r);
    for (i, a) in before.amps().iter().enumerate() {
        for j in 0..5 {
            assert!(approx(d.amps()[i * 5 + j], a / 5f64.sqrt()));
        }
    }
    assert!((d.norm_sqr() - 1.0).abs() < 1e-9);
    assert_eq!(ctx.discrepancies(), 0);
}

#[test]
fn shear_of_square_expands() {
    let k = field("7");
    let mut ctx = SimContext::new(&k, Backend::CrossCheck);
    let x1 = ctx.alloc();
    let p = PhaseState::with_exponent(&k, vec![x1], MPoly::term(k.one(), x1, 2));
    let s = ctx.from_phase(p).unwrap();
    let (s, x) = ctx.append_uniform(s).unwrap();
    let s = ctx.shear_subtract(s, &[k.one()], x).unwrap();
    let want = MPoly::term(k.one(), x1, 2)
        .add(&k, &MPoly::var(x1).mul(&k, &MPoly::var(x)).scale(&k, k.from_int(2)))
        .add(&k, &MPoly::term(k.one(), x, 2));
    assert_eq!(s.phase().unwrap().exponent(), &want);
    assert_eq!(ctx.discrepancies(), 0);
    assert_eq!(ctx.comparisons(), 2);

    let s2 = ctx.shear_subtract(s.clone(), &[k.zero()], x).unwrap();
    assert_eq!(s2.phase().unwrap().exponent(), s.phase().unwrap().exponent());
}

fn random_exponent(k: &FieldParams, regs: &[RegId], deg: u64, rng: &mut RngStream) -> MPoly {
    let mut e = MPoly::zero();
    for &r in regs {
        for d in 1..=deg {
            e = e.add(k, &MPoly::term(k.random_element(rng, false), r, d));
        }
    }
    if regs.len() > 1 {
        let c = k.random_element(rng, false);
        e = e.add(k, &MPoly::var(regs[0]).mul(k, &MPoly::var(regs[1])).scale(k, c));
    }
    e
}

#[test]
fn cross_backend_random_pipeline_f5() {
    let k = field("5");
    let mut rng = RngStream::seed_from(77);
    for _ in 0..30 {
        let mut ctx = SimContext::new(&k, Backend::CrossCheck);
        let a = ctx.alloc();
        let b = ctx.alloc();
        let e = random_exponent(&k, &[a, b], 3, &mut rng);
        let s = ctx.from_phase(PhaseState::with_exponent(&k, vec![a, b], e)).unwrap();
        let (s, x) = ctx.append_uniform(s).unwrap();
        let d = [k.random_element(&mut rng, false), k.random_element(&mut rng, false)];
        let s = ctx.shear_subtract(s, &d, x).unwrap();
        let s = ctx.subtract_poly(s, a, x, &UniPoly::from_ints(&k, &[1, 2, 3])).unwrap();
        let (s, _) = ctx.measure(s, &[a], &mut rng).unwrap();
        let (_, _) = ctx.measure(s, &[b], &mut rng).unwrap();
        assert_eq!(ctx.discrepancies(), 0);
    }
}

#[test]
fn measurement_uniform_and_residual() {
    let k = field("7");
    let mut rng = RngStream::seed_from(12);
    let mut counts = [0u64; 7];
    let (a, b) = (RegId(0), RegId(1));
    let e = MPoly::term(k.from_int(3), a, 2)
        .mul(&k, &MPoly::var(b))
        .add(&k, &MPoly::term(k.from_int(5), b, 3));
    for _ in 0..10_000 {
        let mut p = PhaseState::with_exponent(&k, vec![a, b], e.clone());
        let r = p.measure(&[a], &mut rng).unwrap();
        counts[r[0].outcome.index() as usize] += 1;
        let want = e.partial_eval(&k, a, r[0].outcome).without_constant();
        assert_eq!(p.exponent(), &want);
    }
    assert!(chi2_uniform(&counts) < CHI2_6_999, "{counts:?}");

    let mut p = PhaseState::with_exponent(&k, vec![a, b], e);
    let r = p.measure(&[a, b], &mut rng).unwrap();
    assert_eq!(r.len(), 2);
    assert!(p.regs().is_empty());
}

#[test]
fn dense_measurement_matches_phase_distribution() {
    let k = field("7");
    let mut rng = RngStream::seed_from(13);
    let (a, b) = (RegId(0), RegId(1));
    let e = MPoly::term(k.from_int(3), a, 2).mul(&k, &MPoly::var(b));
    let d0 = PhaseState::with_exponent(&k, vec![a, b], e).to_dense(1 << 20).unwrap();
    let mut counts = [0u64; 7];
    for _ in 0..10_000 {
        let mut d = d0.clone();
        let r = d.measure(&[b], &mut rng).unwrap();
        counts[r[0].outcome.index() as usize] += 1;
    }
    assert!(chi2_uniform(&counts) < CHI2_6_999, "{counts:?}");
}

#[test]
fn subtract_poly_collapses_level_set() {
    let k = field("5");
    let mut ctx = SimContext::new(&k, Backend::CrossCheck);
    let f = UniPoly::from_ints(&k, &[0, 2, 1, 4]);
    let w = k.from_int(3);
    let s = ctx.prepare_level_set(&[w], &[f.clone()]).unwrap();
    let (u, x) = (s.regs()[0], s.regs()[1]);
    let same = ctx.subtract_poly(s.clone(), u, x, &UniPoly::zero()).unwrap();
    assert_eq!(same.dense().unwrap().distance_up_to_phase(s.dense().unwrap()), 0.0);
    let s = ctx.subtract_poly(s, u, x, &f).unwrap();
    let dep = s.phase().unwrap().dependent(u).unwrap();
    assert_eq!(dep, &MPoly::constant(w));
    let d = s.dense().unwrap();
    for xv in k.elements() {
        assert!(d.amp_at(&[w, xv]).norm() > 0.4);
    }
    assert_eq!(ctx.discrepancies(), 0);
}

#[test]
fn power_substitute_linearizes_f4() {
    let k = field("2^2");
    let mut ctx = SimContext::new(&k, Backend::CrossCheck);
    let x = ctx.alloc();
    let z = k.generator();
    let s = ctx.from_phase(PhaseState::with_exponent(&k, vec![x], MPoly::term(z, x, 2))).unwrap();
    let s = ctx.power_substitute(s, x, 1).unwrap();
    assert_eq!(s.phase().unwrap().exponent(), &MPoly::term(z, x, 1));
    assert_eq!(ctx.discrepancies(), 0);
    let mut rng = RngStream::seed_from(0);
    assert_eq!(ctx.extract_linear_phase(s, &mut rng).unwrap(), z);
    assert_eq!(ctx.discrepancies(), 0);
}

#[test]
fn power_substitute_identities() {
    let k = field("3^3");
    let x = RegId(0);
    let e = MPoly::term(k.generator(), x, 2).add(&k, &MPoly::term(k.one(), x, 3));
    let mut p = PhaseState::with_exponent(&k, vec![x], e.clone());
    p.power_substitute(x, 3).unwrap();
    assert_eq!(p.exponent(), &e);
    p.power_substitute(x, 1).unwrap();
    p.power_substitute(x, 2).unwrap();
    assert_eq!(p.exponent(), &e);
}

#[test]
fn extract_examples() {
    let k = field("7");
    let mut rng = RngStream::seed_from(0);
    let x = RegId(0);
    let mut ctx = SimContext::new(&k, Backend::CrossCheck);
    let s = ctx.from_phase(PhaseState::with_exponent(&k, vec![x], MPoly::term(k.from_int(3), x, 1))).unwrap();
    assert_eq!(ctx.extract_linear_phase(s, &mut rng).unwrap(), k.from_int(3));
    let s = ctx.from_phase(PhaseState::with_exponent(&k, vec![x], MPoly::zero())).unwrap();
    assert_eq!(ctx.extract_linear_phase(s, &mut rng).unwrap(), k.zero());
    let s = ctx.from_phase(PhaseState::with_exponent(&k, vec![x], MPoly::term(k.one(), x, 2))).unwrap();
    assert_eq!(ctx.extract_linear_phase(s, &mut rng), Err(StateError::NonlinearExponent));
    assert_eq!(ctx.discrepancies(), 0);
}

#[test]
fn extract_dense_agrees_f9() {
    let k = field("3^2");
    let mut rng = RngStream::seed_from(21);
    let x = RegId(0);
    for _ in 0..100 {
        let c = k.random_element(&mut rng, false);
        let p = PhaseState::with_exponent(&k, vec![x], MPoly::term(c, x, 1));
        let mut d = p.to_dense(1 << 10).unwrap();
        let (got, prob) = d.extract_linear(&mut rng).unwrap();
        assert_eq!(got, c);
        assert!((prob - 1.0).abs() < 1e-9);
    }
}

#[test]
fn to_dense_uniform_and_normalized() {
    let k = field("5");
    let p = PhaseState::uniform(&k, vec![RegId(0), RegId(1)]);
    let d = p.to_dense(1 << 10).unwrap();
    assert!(d.amps().iter().all(|a| approx(*a, Complex64::new(0.2, 0.0))));
    let mut rng = RngStream::seed_from(2);
    let e = random_exponent(&k, &[RegId(0), RegId(1)], 3, &mut rng);
    let d = PhaseState::with_exponent(&k, vec![RegId(0), RegId(1)], e).to_dense(1 << 10).unwrap();
    assert!((d.norm_sqr() - 1.0).abs() < 1e-9);
    let big = PhaseState::uniform(&k, (0..12).map(RegId).collect());
    assert!(matches!(big.to_dense(1 << 24), Err(StateError::CapacityExceeded { .. })));
}

/// Three quadratic level-set states over F_5 taken through the first
/// transform, product, shear and measurement, phase versus dense at every
/// step.
#[test]
fn three_state_quadratic_walkthrough_f5() {
    let k = field("5");
    let mut rng = RngStream::seed_from(5);
    let f = UniPoly::from_ints(&k, &[0, 2, 3]);
    for _ in 0..20 {
        let mut ctx = SimContext::new(&k, Backend::CrossCheck);
        let mut singles = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..3 {
            let w = k.random_element(&mut rng, false);
            let s = ctx.prepare_level_set(&[w], &[f.clone()]).unwrap();
            let u = s.regs()[0];
            let (s, recs) = ctx.fourier_measure_first(s, &[u], &mut rng).unwrap();
            ys.push(recs[0].outcome);
            singles.push(s);
        }
        if ys.iter().any(|y| y.is_zero()) {
            continue;
        }
        // y1 d1^2 + y2 d2^2 + y3 d3^2 = 0 by search
        let mut deltas = None;
        'outer: for a in k.elements() {
            for b in k.elements() {
                for c in k.elements() {
                    let q = k.sum([
                        k.mul(ys[0], k.mul(a, a)),
                        k.mul(ys[1], k.mul(b, b)),
                        k.mul(ys[2], k.mul(c, c)),
                    ]);
                    if q.is_zero() && !(a.is_zero() && b.is_zero() && c.is_zero()) {
                        deltas = Some([a, b, c]);
                        break 'outer;
                    }
                }
            }
        }
        let deltas = deltas.unwrap();
        let (s, _) = ctx.shear_measure(singles, &deltas, &mut rng).unwrap();
        let e = s.phase().unwrap().exponent();
        assert!(e.degree_in(s.regs()[0]) <= 1, "quadratic term survived: {}", e.format(&k));
        assert_eq!(ctx.discrepancies(), 0);
        assert!(ctx.comparisons() > 10);
    }
}

#[test]
fn fused_dense_shear_matches_stepwise() {
    let k = field("7");
    let mut rng = RngStream::seed_from(40);
    for _ in 0..50 {
        let mut ctx = SimContext::new(&k, Backend::Dense);
        let regs: Vec<RegId> = (0..3).map(|_| ctx.alloc()).collect();
        let group: Vec<State> = regs
            .iter()
            .map(|&r| {
                let e = random_exponent(&k, &[r], 3, &mut rng);
                State::Dense(PhaseState::with_exponent(&k, vec![r], e).to_dense(1 << 10).unwrap())
            })
            .collect();
        let deltas: Vec<FieldElement> = (0..3).map(|_| k.random_element(&mut rng, false)).collect();
        let (fused, outs) = ctx.shear_measure(group.clone(), &deltas, &mut rng).unwrap();

        let mut d = DenseState::product(group.into_iter().map(|s| s.dense().unwrap().clone()).collect(), 1 << 20).unwrap();
        let x = fused.regs()[0];
        d.append_uniform(x, 1 << 20).unwrap();
        let pairs: Vec<(RegId, FieldElement)> = regs.iter().copied().zip(deltas.iter().copied()).collect();
        d.shear(&pairs, x).unwrap();
        let outcomes: Vec<(RegId, FieldElement)> = regs.iter().copied().zip(outs.iter().copied()).collect();
        let prob = d.collapse(&outcomes).unwrap();
        assert!(prob > 0.0);
        assert!(fused.dense().unwrap().distance_up_to_phase(&d) < 1e-9);
    }
}

#[test]
fn fused_dense_outcome_distribution() {
    // marginal of the first outcome, fused sampler against the exact
    // stepwise Born marginal
    let k = field("5");
    let mut rng = RngStream::seed_from(41);
    let (a, b) = (RegId(0), RegId(1));
    let pa = PhaseState::with_exponent(&k, vec![a], MPoly::term(k.one(), a, 2)).to_dense(1 << 10).unwrap();
    let mut amps_b = vec![Complex64::new(0.0, 0.0); 5];
    amps_b[1] = Complex64::new(0.8, 0.0);
    amps_b[3] = Complex64::new(0.0, 0.6);
    let pb = DenseState::from_parts(k.clone(), vec![b], amps_b);
    let deltas = [k.from_int(1), k.from_int(2)];

    let mut d = DenseState::product(vec![pa.clone(), pb.clone()], 1 << 10).unwrap();
    let x = RegId(9);
    d.append_uniform(x, 1 << 10).unwrap();
    d.shear(&[(a, deltas[0]), (b, deltas[1])], x).unwrap();
    let mut exact = [0.0; 5];
    for (i, p) in exact.iter_mut().enumerate() {
        let mut c = d.clone();
        *p = c.collapse(&[(b, FieldElement(i as u64))]).unwrap_or(0.0);
    }

    let n = 20_000;
    let mut counts = [0f64; 5];
    for _ in 0..n {
        let mut ctx = SimContext::new(&k, Backend::Dense);
        ctx.next_reg = 10;
        let g = vec![State::Dense(pa.clone()), State::Dense(pb.clone())];
        let (_, outs) = ctx.shear_measure(g, &deltas, &mut rng).unwrap();
        counts[outs[1].index() as usize] += 1.0;
    }
    let chi2: f64 = (0..5)
        .filter(|&i| exact[i] > 0.0)
        .map(|i| (counts[i] - n as f64 * exact[i]).powi(2) / (n as f64 * exact[i]))
        .sum();
    // 0.999 quantile, 4 degrees of freedom
    assert!(chi2 < 18.467, "chi2 {chi2} counts {counts:?} exact {exact:?}");
}

#[test]
fn trace_lines_are_reproducible() {
    let k = field("7");
    let run = || {
        let mut ctx = SimContext::new(&k, Backend::Phase).with_trace();
        let mut rng = RngStream::seed_from(99);
        let s = ctx.prepare_level_set(&[k.from_int(1)], &[UniPoly::from_ints(&k, &[0, 1, 2])]).unwrap();
        let u = s.regs()[0];
        let _ = ctx.fourier_measure_first(s, &[u], &mut rng).unwrap();
        ctx.take_trace()
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a[0], "prepare_level_set regs=[r0,r1] e=0; r0=[1] + [1]*r1 + [2]*r1^2");
    assert!(a.last().unwrap().starts_with("measure regs=[r0] out=["));
}

#[test]
fn weighted_state_measure_and_reject() {
    let k = field("3");
    let (a, b) = (RegId(0), RegId(1));
    let table: Vec<f64> = (0..9).map(|i| (i % 3) as f64).collect();
    let p = PhaseState::uniform(&k, vec![a, b]).with_weight(Weight { regs: vec![a, b], table: Arc::new(table) }).unwrap();
    let mut q = p.clone();
    assert!(matches!(q.qft(a, false), Err(StateError::SymbolicUnsupported(_))));
    let d = p.to_dense(1 << 10).unwrap();
    assert!((d.norm_sqr() - 1.0).abs() < 1e-9);
    let mut rng = RngStream::seed_from(4);
    let mut m = p.clone();
    let r = m.measure(&[b], &mut rng).unwrap();
    assert_ne!(r[0].outcome.index(), 0);
    assert!((r[0].probability - if r[0].outcome.index() == 1 { 0.2 } else { 0.8 }).abs() < 1e-12);
}

use std::sync::Arc;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn backends_agree_on_random_ops(seed in any::<u64>(), spec in prop::sample::select(vec!["2^2", "5", "7", "3^2"])) {
        let k = field(spec);
        let mut rng = RngStream::seed_from(seed);
        let mut ctx = SimContext::new(&k, Backend::CrossCheck);
        let f = UniPoly::new((0..4).map(|i| if i == 0 { k.zero() } else { k.random_element(&mut rng, false) }).collect());
        let s = ctx.prepare_level_set(&[k.random_element(&mut rng, false)], &[f]).unwrap();
        let (u, x) = (s.regs()[0], s.regs()[1]);
        let (s, _) = ctx.fourier_measure_first(s, &[u], &mut rng).unwrap();
        let (s, z) = ctx.append_uniform(s).unwrap();
        let s = ctx.shear_subtract(s, &[k.random_element(&mut rng, false)], z).unwrap();
        let (s, _) = ctx.measure(s, &[x], &mut rng).unwrap();
        let s = ctx.power_substitute(s, z, 1).unwrap();
        prop_assert!(s.dense().map(|d| (d.norm_sqr() - 1.0).abs() < 1e-9).unwrap());
        prop_assert_eq!(ctx.discrepancies(), 0);
    }
}

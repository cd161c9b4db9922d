//! Hidden polynomial problem for `F(x, y) = g(y) − f(x)` with `g` public.
//!
//! An oracle hands out opaque tokens `E(g(y) − f(x))`. Measuring the token
//! register of `Σ |y⟩|x⟩|E(g(y) − f(x))⟩` leaves `Φ_w`, the uniform state on
//! a level set of `F`; the map `U_g` folds each root set of `g` onto its
//! value, giving `Ψ_w`, which is close to the level-set state of the graph
//! of `f`. Those states are fed to the graph solver and candidate answers are
//! checked against the oracle.

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{find_roots, FieldElement, FieldParams, UniPoly};
use crate::hpgp::{
    element_from_json, element_to_json, solve, HiddenModel, HpgpError, InnerStats, LevelSetSource, SolveConfig,
    DEFAULT_MULTIPLIER,
};
use crate::rng::RngStream;
use crate::statesim::{Backend, DenseState, RegId, SimContext, State, StateError, DEFAULT_DENSE_CAP};

/// Largest field the oracle is simulated over; states live on `q²` points.
pub const MAX_ORDER: u64 = 1 << 12;
pub const DEFAULT_ROUNDS: usize = 50;
/// Random offsets tried by [`verify_guess`] before giving up.
pub const VERIFY_ATTEMPTS: usize = 1000;
const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HppError {
    #[error("invalid oracle spec: {0}")]
    InvalidSpec(String),
    /// The first register is not a combination of uniform root-set states.
    #[error("state leaves the domain of U_g")]
    OutsideImage,
    #[error("no offset with enough solutions in {attempts} attempts")]
    ExhaustedSampling { attempts: usize },
    #[error("state simulation: {0}")]
    State(#[from] StateError),
    #[error("solver: {0}")]
    Hpgp(#[from] HpgpError),
}

/// Oracle for `g(y) − f(x)` behind a random injective encoding.
#[derive(Debug, Clone)]
pub struct OracleSpec {
    field: FieldParams,
    g: UniPoly,
    f: UniPoly,
    degree: usize,
    encoding: Vec<u64>,
    /// Roots of `g(y) = z`, indexed by `z`.
    roots: Vec<Vec<FieldElement>>,
}

impl OracleSpec {
    /// `degree` is the public bound `D` on `deg f`.
    pub fn new(field: &FieldParams, g: UniPoly, f: UniPoly, degree: usize, encoding_seed: u64) -> Result<Self, HppError> {
        let bad = |m: String| Err(HppError::InvalidSpec(m));
        let q = field.q();
        if q > MAX_ORDER {
            return bad(format!("q = {q} exceeds {MAX_ORDER}"));
        }
        if g.degree().unwrap_or(0) == 0 {
            return bad("g must be non-constant".into());
        }
        if !f.coeff(0).is_zero() {
            return bad("f must have zero constant term".into());
        }
        if degree == 0 || degree as u64 >= q {
            return bad(format!("degree bound {degree} must be in 1..{q}"));
        }
        if f.degree().unwrap_or(0) > degree {
            return bad(format!("f has degree above {degree}"));
        }
        let mut rng = RngStream::seed_from(encoding_seed);
        let mut seen = HashSet::with_capacity(q as usize);
        let mut encoding = Vec::with_capacity(q as usize);
        while encoding.len() < q as usize {
            let t = rng.next_u64();
            if seen.insert(t) {
                encoding.push(t);
            }
        }
        let roots = field.elements().map(|z| find_roots(field, &g, z)).collect();
        Ok(OracleSpec { field: field.clone(), g, f, degree, encoding, roots })
    }

    /// Random `f` of degree exactly `degree` with `f(0) = 0`.
    pub fn random(field: &FieldParams, g: UniPoly, degree: usize, f_seed: u64, encoding_seed: u64) -> Result<Self, HppError> {
        let mut rng = RngStream::seed_from(f_seed);
        let mut c = vec![FieldElement::ZERO];
        for s in 1..=degree {
            c.push(field.random_element(&mut rng, s == degree));
        }
        Self::new(field, g, UniPoly::new(c), degree, encoding_seed)
    }

    /// `{field, g, f | f_seed, degree, encoding_seed}`. `degree` defaults to
    /// `deg f` when `f` is given and is required with `f_seed`.
    pub fn from_json(text: &str) -> Result<Self, HppError> {
        let bad = |m: &str| HppError::InvalidSpec(m.to_string());
        let v: Value = serde_json::from_str(text).map_err(|e| HppError::InvalidSpec(e.to_string()))?;
        let field = v["field"].as_str().ok_or_else(|| bad("missing field"))?;
        let k = FieldParams::parse(field).map_err(|e| HppError::InvalidSpec(e.to_string()))?;
        let poly = |key: &str| -> Result<UniPoly, HppError> {
            let arr = v[key].as_array().ok_or_else(|| bad(&format!("{key} must be a coefficient list")))?;
            let c: Result<Vec<FieldElement>, HpgpError> = arr.iter().map(|e| element_from_json(&k, e)).collect();
            Ok(UniPoly::new(c?))
        };
        let g = poly("g")?;
        let enc = v["encoding_seed"].as_u64().unwrap_or(0);
        let degree = v["degree"].as_u64().map(|d| d as usize);
        if v.get("f").is_some() {
            let f = poly("f")?;
            let d = degree.unwrap_or_else(|| f.degree().unwrap_or(1).max(1));
            return Self::new(&k, g, f, d, enc);
        }
        let seed = v["f_seed"].as_u64().ok_or_else(|| bad("need f or f_seed"))?;
        let d = degree.ok_or_else(|| bad("f_seed needs a degree"))?;
        Self::random(&k, g, d, seed, enc)
    }

    /// Writes `f` explicitly; the encoding is only reproducible from its seed,
    /// so `encoding_seed` must be supplied.
    pub fn to_json(&self, encoding_seed: u64) -> Value {
        let k = &self.field;
        let list = |p: &UniPoly| -> Vec<Value> { p.coeffs().iter().map(|&c| element_to_json(k, c)).collect() };
        json!({
            "field": k.spec_string(),
            "g": list(&self.g),
            "f": list(&self.f),
            "degree": self.degree,
            "encoding_seed": encoding_seed,
        })
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn g(&self) -> &UniPoly {
        &self.g
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn g_degree(&self) -> usize {
        self.g.degree().unwrap_or(0)
    }

    /// The planted `f`. Meant for checking results, never for solving.
    pub fn secret(&self) -> &UniPoly {
        &self.f
    }

    /// `{y : g(y) = z}`.
    pub fn roots_of(&self, z: FieldElement) -> &[FieldElement] {
        &self.roots[z.index() as usize]
    }

    pub fn token(&self, w: FieldElement) -> u64 {
        self.encoding[w.index() as usize]
    }
}

/// `E(g(y) − f(x))`.
pub fn oracle_query(spec: &OracleSpec, x: FieldElement, y: FieldElement) -> u64 {
    let k = &spec.field;
    spec.token(k.sub(spec.g.eval(k, y), spec.f.eval(k, x)))
}

/// Level-set sizes `M_F(w) = #{(x, y) : g(y) − f(x) = w}` and
/// `m_g(w) = #{y : g(y) = w}`, indexed by `w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSetStats {
    pub m_f: Vec<u64>,
    pub m_g: Vec<u64>,
}

impl LevelSetStats {
    pub fn compute(spec: &OracleSpec) -> Self {
        let k = &spec.field;
        let q = k.q() as usize;
        let mut m_g = vec![0u64; q];
        for y in k.elements() {
            m_g[spec.g.eval(k, y).index() as usize] += 1;
        }
        let mut m_f = vec![0u64; q];
        for x in k.elements() {
            let fx = spec.f.eval(k, x);
            for z in k.elements() {
                m_f[k.sub(z, fx).index() as usize] += m_g[z.index() as usize];
            }
        }
        LevelSetStats { m_f, m_g }
    }

    pub fn big(&self, w: FieldElement) -> u64 {
        self.m_f[w.index() as usize]
    }

    pub fn small(&self, w: FieldElement) -> u64 {
        self.m_g[w.index() as usize]
    }
}

/// Draws `Φ_w` states. Simulating the token measurement needs the oracle on
/// every pair once; the table is kept for later draws.
pub struct PhiSampler<'a> {
    spec: &'a OracleSpec,
    /// Token of pair `y·q + x`.
    tokens: Vec<u64>,
    classes: HashMap<u64, Vec<u32>>,
}

impl<'a> PhiSampler<'a> {
    pub fn new(spec: &'a OracleSpec) -> Self {
        let k = &spec.field;
        let q = k.q() as usize;
        let mut tokens = Vec::with_capacity(q * q);
        let mut classes: HashMap<u64, Vec<u32>> = HashMap::new();
        for y in k.elements() {
            for x in k.elements() {
                let t = oracle_query(spec, x, y);
                classes.entry(t).or_default().push(tokens.len() as u32);
                tokens.push(t);
            }
        }
        PhiSampler { spec, tokens, classes }
    }

    /// Measure the token register of the uniform query superposition; the
    /// residual state on `(y, x)` is returned with the observed token.
    pub fn sample(&self, y: RegId, x: RegId, rng: &mut RngStream) -> (DenseState, u64) {
        let k = &self.spec.field;
        let pick = rng.gen_range(0..self.tokens.len());
        let token = self.tokens[pick];
        let class = &self.classes[&token];
        let a = Complex64::new(1.0 / (class.len() as f64).sqrt(), 0.0);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.tokens.len()];
        for &i in class {
            amps[i as usize] = a;
        }
        (DenseState::from_parts(k.clone(), vec![y, x], amps), token)
    }
}

/// One `Φ_w` on registers `r0 = y`, `r1 = x`.
pub fn sample_phi_w(spec: &OracleSpec, rng: &mut RngStream) -> Result<(DenseState, u64), HppError> {
    let q = spec.field.q();
    if q * q > DEFAULT_DENSE_CAP {
        return Err(StateError::CapacityExceeded { regs: 2, cap: DEFAULT_DENSE_CAP }.into());
    }
    Ok(PhiSampler::new(spec).sample(RegId(0), RegId(1), rng))
}

/// `U_g` on the first register: the uniform state over the roots of
/// `g(y) = z` goes to `|z⟩`.
pub fn apply_u_g(spec: &OracleSpec, s: &DenseState) -> Result<DenseState, HppError> {
    let k = &spec.field;
    let q = k.q() as usize;
    if s.regs().len() != 2 {
        return Err(HppError::InvalidSpec(format!("U_g expects two registers, got {}", s.regs().len())));
    }
    let amps = s.amps();
    let mut out = vec![Complex64::new(0.0, 0.0); q * q];
    for z in k.elements() {
        let roots = spec.roots_of(z);
        if roots.is_empty() {
            continue;
        }
        let scale = 1.0 / (roots.len() as f64).sqrt();
        let zi = z.index() as usize;
        for x in 0..q {
            let sum: Complex64 = roots.iter().map(|y| amps[y.index() as usize * q + x]).sum();
            out[zi * q + x] = sum * scale;
        }
    }
    let before = s.norm_sqr();
    let after: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    if (before - after).abs() > NORM_TOLERANCE {
        return Err(HppError::OutsideImage);
    }
    Ok(DenseState::from_parts(k.clone(), s.regs().to_vec(), out))
}

/// `(⟨Ψ_w|Λ_w⟩, √(M_F(w) / (D' q)))` from the level-set tables.
pub fn overlap_bound_check(spec: &OracleSpec, stats: &LevelSetStats, w: FieldElement) -> (f64, f64) {
    let k = &spec.field;
    let q = k.q() as f64;
    let big = stats.big(w) as f64;
    let sum: f64 = k.elements().map(|x| (stats.small(k.add(spec.f.eval(k, x), w)) as f64).sqrt()).sum();
    let exact = sum / (big * q).sqrt();
    let bound = (big / (spec.g_degree() as f64 * q)).sqrt();
    (exact, bound)
}

/// `Ψ` states presented to the graph solver as level-set states of the
/// univariate model with unknown coefficients of `x, …, x^D`.
pub struct PsiSource<'a> {
    spec: &'a OracleSpec,
    sampler: PhiSampler<'a>,
    model: HiddenModel,
}

impl<'a> PsiSource<'a> {
    pub fn new(spec: &'a OracleSpec) -> Result<Self, HppError> {
        let model = HiddenModel::univariate(&spec.field, spec.degree)?;
        Ok(PsiSource { spec, sampler: PhiSampler::new(spec), model })
    }
}

impl LevelSetSource for PsiSource<'_> {
    fn model(&self) -> &HiddenModel {
        &self.model
    }

    fn fresh_state(&self, ctx: &mut SimContext, rng: &mut RngStream) -> Result<State, StateError> {
        let u = ctx.alloc();
        let x = ctx.alloc();
        let (phi, _) = self.sampler.sample(u, x, rng);
        match apply_u_g(self.spec, &phi) {
            Ok(psi) => Ok(State::Dense(psi)),
            Err(HppError::State(e)) => Err(e),
            Err(e) => Err(StateError::BackendMismatch(e.to_string())),
        }
    }
}

/// Check a candidate `f0` through the oracle alone. Draws offsets `w` until
/// `D + 1` distinct `x` have some `y` with `g(y) = f0(x) + w`, then asks
/// whether all those pairs share one token.
pub fn verify_guess(spec: &OracleSpec, f0: &UniPoly, rng: &mut RngStream) -> Result<bool, HppError> {
    verify_guess_with(spec, f0, VERIFY_ATTEMPTS, rng)
}

pub fn verify_guess_with(spec: &OracleSpec, f0: &UniPoly, attempts: usize, rng: &mut RngStream) -> Result<bool, HppError> {
    let k = &spec.field;
    let need = spec.degree + 1;
    if f0.degree().unwrap_or(0) > spec.degree {
        return Ok(false);
    }
    for _ in 0..attempts {
        let w = k.random_element(rng, false);
        let mut pairs: Vec<(FieldElement, FieldElement)> = k
            .elements()
            .filter_map(|x| {
                let roots = spec.roots_of(k.add(f0.eval(k, x), w));
                roots.choose(rng).map(|&y| (x, y))
            })
            .collect();
        if pairs.len() < need {
            continue;
        }
        pairs.shuffle(rng);
        let first = oracle_query(spec, pairs[0].0, pairs[0].1);
        return Ok(pairs[1..need].iter().all(|&(x, y)| oracle_query(spec, x, y) == first));
    }
    Err(HppError::ExhaustedSampling { attempts })
}

#[derive(Debug, Clone)]
pub struct HppConfig {
    pub rounds: usize,
    pub multiplier: u64,
    pub verify_attempts: usize,
}

impl Default for HppConfig {
    fn default() -> Self {
        HppConfig { rounds: DEFAULT_ROUNDS, multiplier: DEFAULT_MULTIPLIER, verify_attempts: VERIFY_ATTEMPTS }
    }
}

#[derive(Debug, Clone)]
pub struct HppReport {
    /// The verified `f`, normalized to `f(0) = 0`.
    pub f: Option<UniPoly>,
    pub rounds_used: usize,
    /// Rounds where the solver ran out of states.
    pub solver_failures: usize,
    /// Rounds whose guess the oracle rejected.
    pub rejected_guesses: usize,
    pub stats: InnerStats,
}

/// Repeat solver rounds on `Ψ` states until a guess passes [`verify_guess`].
pub fn solve_hpp(spec: &OracleSpec, cfg: &HppConfig, rng: &mut RngStream) -> Result<HppReport, HppError> {
    if cfg.rounds == 0 {
        return Err(HppError::InvalidSpec("rounds must be at least 1".into()));
    }
    let source = PsiSource::new(spec)?;
    let scfg = SolveConfig { backend: Backend::Dense, multiplier: cfg.multiplier, ..Default::default() };
    let mut report = HppReport { f: None, rounds_used: 0, solver_failures: 0, rejected_guesses: 0, stats: InnerStats::default() };
    for _ in 0..cfg.rounds {
        let mut round = rng.fork();
        report.rounds_used += 1;
        let r = solve(&source, &scfg, &mut round)?;
        report.stats.merge(&r.stats);
        let Ok(v) = r.result else {
            report.solver_failures += 1;
            continue;
        };
        let mut c = vec![FieldElement::ZERO];
        c.extend(v);
        let f0 = UniPoly::new(c);
        match verify_guess_with(spec, &f0, cfg.verify_attempts, &mut round) {
            Ok(true) => {
                report.f = Some(f0);
                return Ok(report);
            }
            Ok(false) => report.rejected_guesses += 1,
            Err(HppError::ExhaustedSampling { .. }) => report.rejected_guesses += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// `f0 − f` is constant.
pub fn same_up_to_constant(k: &FieldParams, f0: &UniPoly, f: &UniPoly) -> bool {
    f0.sub(k, f).degree().unwrap_or(0) == 0
}

#[cfg(test)]
mod tests;

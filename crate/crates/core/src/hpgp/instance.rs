use super::HpgpError;
use crate::field::{FieldElement, FieldParams, UniPoly};
use crate::rng::RngStream;
use crate::statesim::{SimContext, State, StateError};
use serde_json::{json, Value};

/// The public part of a hidden function `f_i(x) = Σ_s Σ_j a_{isj} v_j x^s`.
///
/// `a[i][s][j]` for `i < m`, `s in 0..=degree` (row 0 is always zero) and
/// `j < r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenModel {
    field: FieldParams,
    m: usize,
    r: usize,
    degree: usize,
    a: Vec<Vec<Vec<FieldElement>>>,
}

impl HiddenModel {
    pub fn new(field: &FieldParams, a: Vec<Vec<Vec<FieldElement>>>) -> Result<Self, HpgpError> {
        let m = a.len();
        let degree = a.first().map_or(0, |rows| rows.len().saturating_sub(1));
        let r = a.first().and_then(|rows| rows.first()).map_or(0, |row| row.len());
        if m == 0 || degree == 0 || r == 0 {
            return Err(HpgpError::InvalidInstance("m, r and D must be at least 1".into()));
        }
        if a.iter().any(|rows| rows.len() != degree + 1 || rows.iter().any(|row| row.len() != r)) {
            return Err(HpgpError::InvalidInstance("ragged coefficient tensor".into()));
        }
        if a.iter().any(|rows| rows[0].iter().any(|e| !e.is_zero())) {
            return Err(HpgpError::InvalidInstance("constant terms must be zero".into()));
        }
        if a.iter().flatten().flatten().all(|e| e.is_zero()) {
            return Err(HpgpError::InvalidInstance("all coefficients are zero".into()));
        }
        if degree as u64 >= field.q() {
            return Err(HpgpError::InvalidInstance(format!("degree {degree} must be below q = {}", field.q())));
        }
        Ok(HiddenModel { field: field.clone(), m, r, degree, a })
    }

    /// Single polynomial with unknown coefficients `v_s` of `x^s`.
    pub fn univariate(field: &FieldParams, degree: usize) -> Result<Self, HpgpError> {
        Self::multi(field, 1, degree)
    }

    /// `m` polynomials with independent unknown coefficients,
    /// `v_{(i-1)D+s}` multiplying `x^s` in coordinate `i`.
    pub fn multi(field: &FieldParams, m: usize, degree: usize) -> Result<Self, HpgpError> {
        let r = m * degree;
        let mut a = vec![vec![vec![FieldElement::ZERO; r]; degree + 1]; m];
        for (i, rows) in a.iter_mut().enumerate() {
            for s in 1..=degree {
                rows[s][i * degree + s - 1] = FieldElement::ONE;
            }
        }
        Self::new(field, a)
    }

    /// Uniformly random tensor, redrawn until it is nonzero.
    pub fn random(field: &FieldParams, m: usize, r: usize, degree: usize, rng: &mut RngStream) -> Result<Self, HpgpError> {
        loop {
            let mut a = vec![vec![vec![FieldElement::ZERO; r]; degree + 1]; m];
            for rows in a.iter_mut() {
                for row in rows.iter_mut().skip(1) {
                    for e in row.iter_mut() {
                        *e = field.random_element(rng, false);
                    }
                }
            }
            match Self::new(field, a) {
                Err(HpgpError::InvalidInstance(msg)) if msg.contains("all coefficients") => continue,
                other => return other,
            }
        }
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tensor(&self) -> &[Vec<Vec<FieldElement>>] {
        &self.a
    }

    /// `f_i` for a given parameter vector.
    pub fn polys(&self, v: &[FieldElement]) -> Vec<UniPoly> {
        let k = &self.field;
        self.a
            .iter()
            .map(|rows| UniPoly::new(rows.iter().map(|row| k.sum(row.iter().zip(v).map(|(&a, &x)| k.mul(a, x)))).collect()))
            .collect()
    }
}

/// Something that hands out level-set states `Σ_x |w + f(x)⟩|x⟩` for the
/// model, on registers `u_1..u_m, x`.
pub trait LevelSetSource: Sync {
    fn model(&self) -> &HiddenModel;
    fn fresh_state(&self, ctx: &mut SimContext, rng: &mut RngStream) -> Result<State, StateError>;
}

/// A model together with its secret parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HiddenInstance {
    model: HiddenModel,
    v: Vec<FieldElement>,
}

impl HiddenInstance {
    pub fn new(model: HiddenModel, v: Vec<FieldElement>) -> Result<Self, HpgpError> {
        if v.len() != model.r {
            return Err(HpgpError::InvalidInstance(format!("expected {} parameters, got {}", model.r, v.len())));
        }
        Ok(HiddenInstance { model, v })
    }

    pub fn random(model: HiddenModel, rng: &mut RngStream) -> Self {
        let v = (0..model.r).map(|_| model.field.random_element(rng, false)).collect();
        HiddenInstance { model, v }
    }

    /// The planted parameters. Meant for checking results, never for solving.
    pub fn secret(&self) -> &[FieldElement] {
        &self.v
    }

    /// Does `Σ α_j v_{params[j]} = β` hold for the planted parameters?
    pub fn satisfies(&self, params: &[usize], c: &super::LinearConstraint) -> bool {
        let k = &self.model.field;
        let lhs = k.sum(c.alpha.iter().zip(params).map(|(&a, &j)| k.mul(a, self.v[j])));
        lhs == c.beta
    }

    pub fn from_json(text: &str, rng: &mut RngStream) -> Result<Self, HpgpError> {
        let bad = |m: &str| HpgpError::InvalidInstance(m.to_string());
        let doc: Value = serde_json::from_str(text).map_err(|e| bad(&e.to_string()))?;
        let spec = doc["field"].as_str().ok_or_else(|| bad("missing field"))?;
        let k = FieldParams::parse(spec).map_err(|e| bad(&e.to_string()))?;
        let a_json = doc["a"].as_array().ok_or_else(|| bad("missing a"))?;
        let mut a = Vec::new();
        for rows in a_json {
            let rows = rows.as_array().ok_or_else(|| bad("a must be nested arrays"))?;
            let mut out = Vec::new();
            for row in rows {
                let row = row.as_array().ok_or_else(|| bad("a must be nested arrays"))?;
                out.push(row.iter().map(|e| element_from_json(&k, e)).collect::<Result<Vec<_>, _>>()?);
            }
            a.push(out);
        }
        let model = HiddenModel::new(&k, a)?;
        for (key, want) in [("m", model.m), ("r", model.r), ("D", model.degree)] {
            if let Some(n) = doc.get(key).and_then(Value::as_u64) {
                if n as usize != want {
                    return Err(bad(&format!("{key} = {n} does not match the tensor ({want})")));
                }
            }
        }
        match doc.get("v").filter(|v| !v.is_null()) {
            Some(v) => {
                let v = v.as_array().ok_or_else(|| bad("v must be an array"))?;
                let v = v.iter().map(|e| element_from_json(&k, e)).collect::<Result<Vec<_>, _>>()?;
                HiddenInstance::new(model, v)
            }
            None => Ok(HiddenInstance::random(model, rng)),
        }
    }

    pub fn to_json(&self) -> Value {
        let k = &self.model.field;
        let el = |e: &FieldElement| element_to_json(k, *e);
        json!({
            "field": k.spec_string(),
            "m": self.model.m,
            "r": self.model.r,
            "D": self.model.degree,
            "a": self.model.a.iter().map(|rows| rows.iter().map(|row| row.iter().map(el).collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "v": self.v.iter().map(el).collect::<Vec<_>>(),
        })
    }
}

impl LevelSetSource for HiddenInstance {
    fn model(&self) -> &HiddenModel {
        &self.model
    }

    fn fresh_state(&self, ctx: &mut SimContext, rng: &mut RngStream) -> Result<State, StateError> {
        let k = &self.model.field;
        let w: Vec<FieldElement> = (0..self.model.m).map(|_| k.random_element(rng, false)).collect();
        ctx.prepare_level_set(&w, &self.model.polys(&self.v))
    }
}

/// Integers are field values in a prime field and packed indices otherwise;
/// strings use the `"[c0,c1,...]"` coordinate form.
pub fn element_from_json(k: &FieldParams, e: &Value) -> Result<FieldElement, HpgpError> {
    let bad = || HpgpError::InvalidInstance(format!("bad field element {e}"));
    if let Some(n) = e.as_i64() {
        if k.alpha() == 1 {
            return Ok(k.from_int(n));
        }
        if n < 0 || n as u64 >= k.q() {
            return Err(bad());
        }
        return Ok(k.from_index(n as u64));
    }
    let s = e.as_str().ok_or_else(bad)?;
    k.parse_element(s).map_err(|_| bad())
}

pub fn element_to_json(k: &FieldParams, e: FieldElement) -> Value {
    if k.alpha() == 1 {
        json!(e.index())
    } else {
        json!(k.format(e))
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::FieldParams;
use crate::hpgp::DEFAULT_MULTIPLIER;
use crate::hpp;
use crate::statesim::{Backend, DEFAULT_DENSE_CAP};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: PathBuf, msg: String },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// One polynomial; unknowns are its coefficients unless `r` is set, in
    /// which case the tensor is random.
    #[default]
    Hpgp,
    /// `m` polynomials sharing `r` unknowns through a random tensor.
    HpgpMulti,
    /// Oracle for `g(y) − f(x)` with `g(y) = y^{D'}`.
    Hpp,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Hpgp => "hpgp",
            ProblemKind::HpgpMulti => "hpgp-multi",
            ProblemKind::Hpp => "hpp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    #[default]
    Phase,
    Dense,
    CrossCheck,
}

impl From<BackendChoice> for Backend {
    fn from(b: BackendChoice) -> Self {
        match b {
            BackendChoice::Phase => Backend::Phase,
            BackendChoice::Dense => Backend::Dense,
            BackendChoice::CrossCheck => Backend::CrossCheck,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub fields: Vec<String>,
    pub kind: ProblemKind,
    /// `D`.
    pub degree: usize,
    /// `D'`, used by `hpp` only.
    pub g_degree: usize,
    pub m: usize,
    pub r: Option<usize>,
    pub trials: u64,
    pub seed: u64,
    pub multiplier: u64,
    pub backend: BackendChoice,
    /// Solver rounds per `hpp` trial.
    pub rounds: usize,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub trace: bool,
    /// Fill the `wall_ms` column. Off by default so reports are reproducible.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            fields: vec!["7".into()],
            kind: ProblemKind::Hpgp,
            degree: 2,
            g_degree: 2,
            m: 1,
            r: None,
            trials: 100,
            seed: 0,
            multiplier: DEFAULT_MULTIPLIER,
            backend: BackendChoice::Phase,
            rounds: hpp::DEFAULT_ROUNDS,
            out: None,
            format: OutputFormat::Csv,
            trace: false,
            record_timing: false,
        }
    }
}

/// Command-line values that win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub fields: Option<Vec<String>>,
    pub kind: Option<ProblemKind>,
    pub degree: Option<usize>,
    pub g_degree: Option<usize>,
    pub m: Option<usize>,
    pub r: Option<usize>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub multiplier: Option<u64>,
    pub backend: Option<BackendChoice>,
    pub rounds: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub trace: bool,
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.to_path_buf(), msg: e.to_string() })?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { self.$f = v; })* };
        }
        set!(fields, kind, degree, g_degree, m, trials, seed, multiplier, backend, rounds, format);
        if o.r.is_some() {
            self.r = o.r;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
        self.trace |= o.trace;
        self.record_timing |= o.record_timing;
        if o.format.is_none() {
            if let Some(ext) = self.out.as_ref().and_then(|p| p.extension()) {
                if ext == "json" {
                    self.format = OutputFormat::Json;
                }
            }
        }
    }

    pub fn unknowns(&self) -> usize {
        match self.kind {
            ProblemKind::Hpp => self.degree,
            ProblemKind::Hpgp => self.r.unwrap_or(self.degree),
            ProblemKind::HpgpMulti => self.r.unwrap_or(self.degree * self.m),
        }
    }

    pub fn outputs(&self) -> usize {
        match self.kind {
            ProblemKind::HpgpMulti => self.m,
            _ => 1,
        }
    }

    /// Parsed field list, after checking every constraint on the grid.
    pub fn validate(&self) -> Result<Vec<FieldParams>, ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.fields.is_empty() {
            return bad("at least one field is required".into());
        }
        if self.degree == 0 {
            return bad("degree must be at least 1".into());
        }
        if self.multiplier == 0 {
            return bad("multiplier must be at least 1".into());
        }
        if self.kind == ProblemKind::HpgpMulti && self.m == 0 {
            return bad("m must be at least 1".into());
        }
        if self.kind != ProblemKind::HpgpMulti && self.m != 1 {
            return bad(format!("m = {} needs kind hpgp-multi", self.m));
        }
        if self.unknowns() == 0 {
            return bad("r must be at least 1".into());
        }
        if self.kind == ProblemKind::Hpp {
            if self.g_degree == 0 {
                return bad("g_degree must be at least 1".into());
            }
            if self.rounds == 0 {
                return bad("rounds must be at least 1".into());
            }
        }
        let mut out = Vec::new();
        for s in &self.fields {
            let k = FieldParams::parse(s).map_err(|e| ConfigError::Invalid(format!("field {s:?}: {e}")))?;
            let q = k.q();
            if self.degree as u64 >= q {
                return bad(format!("degree {} must be below q = {q}", self.degree));
            }
            if self.kind == ProblemKind::Hpp {
                if q > hpp::MAX_ORDER {
                    return bad(format!("hpp needs q <= {}, got {q}", hpp::MAX_ORDER));
                }
                if self.g_degree as u64 >= q {
                    return bad(format!("g_degree {} must be below q = {q}", self.g_degree));
                }
            }
            let dense = self.kind == ProblemKind::Hpp || self.backend != BackendChoice::Phase;
            let regs = self.outputs() as u32 + 1;
            if dense && q.checked_pow(regs).is_none_or(|n| n > DEFAULT_DENSE_CAP) {
                return bad(format!("dense states on {regs} registers over F_{q} exceed the cap {DEFAULT_DENSE_CAP}"));
            }
            out.push(k);
        }
        Ok(out)
    }
}

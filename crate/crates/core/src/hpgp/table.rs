use crate::field::{FieldElement, FieldParams};
use serde::Serialize;

/// Binomial coefficients reduced mod p, rows `0..=max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinomialTable {
    p: u64,
    rows: Vec<Vec<u64>>,
}

impl BinomialTable {
    pub fn new(p: u64, max: usize) -> Self {
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(max + 1);
        for n in 0..=max {
            let mut row = vec![1u64; n + 1];
            for k in 1..n {
                row[k] = (rows[n - 1][k - 1] + rows[n - 1][k]) % p;
            }
            rows.push(row);
        }
        BinomialTable { p, rows }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.rows[n][k]
        }
    }

    /// Overwrite one entry. Only useful for negative controls.
    pub fn corrupt(&mut self, n: usize, k: usize, value: u64) {
        self.rows[n][k] = value % self.p;
    }
}

/// Exponent of p in n, and the p-free part.
pub fn split_p_power(p: u64, mut n: u64) -> (u32, u64) {
    let mut beta = 0;
    while n > 0 && n.is_multiple_of(p) {
        n /= p;
        beta += 1;
    }
    (beta, n)
}

pub fn is_p_power(p: u64, n: u64) -> bool {
    n >= 1 && split_p_power(p, n).1 == 1
}

/// `floor(log_p d)` for `d >= 1`.
pub fn log_p(p: u64, d: u64) -> usize {
    let mut t = 0;
    let mut v = p;
    while v <= d {
        v *= p;
        t += 1;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    General,
    PPower,
}

/// Coefficients of the current phase as linear forms in the unknowns.
///
/// In the general stage `entries[j][s]` is `Y_{j,s}` for `s in 1..=D`
/// (index 0 unused). In the p-power stage `entries[j][t]` is `Z_{j,t}`, the
/// coefficient of `x^{p^t}`, for `t in 0..=d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffTable {
    pub stage: Stage,
    pub entries: Vec<Vec<FieldElement>>,
    pub controls: Vec<usize>,
}

impl CoeffTable {
    pub fn general(entries: Vec<Vec<FieldElement>>, controls: Vec<usize>) -> Self {
        CoeffTable { stage: Stage::General, entries, controls }
    }

    pub fn r(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, j: usize, s: usize) -> FieldElement {
        self.entries[j].get(s).copied().unwrap_or(FieldElement::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|e| e.is_zero())
    }

    /// Degrees (or p-power indices) carrying a nonzero entry.
    pub fn support_degrees(&self) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for row in &self.entries {
            for (s, e) in row.iter().enumerate() {
                if !e.is_zero() && !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// The general-stage invariant: `Y_{js} = 0` when `s > n_j` and `s` is
    /// not a power of p; in the p-power stage `Z_{jt} = 0` when `t > n_j`.
    pub fn invariant_holds(&self, p: u64) -> bool {
        self.entries.iter().zip(&self.controls).all(|(row, &n)| {
            row.iter().enumerate().all(|(s, e)| match self.stage {
                Stage::General => e.is_zero() || s <= n || is_p_power(p, s as u64),
                Stage::PPower => e.is_zero() || s <= n,
            })
        }) && !self.is_zero()
    }

    /// Reindex `Y_{j,p^t}` to `Z_{j,t}`. Fails if a non-p-power degree above
    /// one is still present.
    pub fn to_p_power(&self, p: u64, degree: usize) -> Option<CoeffTable> {
        let d = log_p(p, degree as u64);
        let mut entries = vec![vec![FieldElement::ZERO; d + 1]; self.r()];
        for (j, row) in self.entries.iter().enumerate() {
            for (s, &e) in row.iter().enumerate().skip(1) {
                if e.is_zero() {
                    continue;
                }
                if !is_p_power(p, s as u64) {
                    return None;
                }
                entries[j][log_p(p, s as u64)] = e;
            }
        }
        let controls = entries
            .iter()
            .map(|row| row.iter().rposition(|e| !e.is_zero()).unwrap_or(0))
            .collect();
        Some(CoeffTable { stage: Stage::PPower, entries, controls })
    }

    pub fn format(&self, k: &FieldParams) -> String {
        let rows: Vec<String> = self
            .entries
            .iter()
            .map(|row| row.iter().map(|&e| k.format(e)).collect::<Vec<_>>().join(" "))
            .collect();
        format!("{:?} n={:?} [{}]", self.stage, self.controls, rows.join("; "))
    }
}

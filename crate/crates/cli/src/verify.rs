//! Tolerance checks encoded as data and evaluated against result tables.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::Preset;
use crate::error::{CliError, Result};
use crate::table::ResultTable;

/// A column, a summary entry or a literal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Operand {
    Literal(f64),
    Ref(String),
}

impl Operand {
    fn resolve(&self, t: &ResultTable) -> Result<Vec<f64>> {
        match self {
            Operand::Literal(x) => Ok(vec![*x]),
            Operand::Ref(r) => {
                if let Some(name) = r.strip_prefix("column:") {
                    t.column(name)
                        .map(<[f64]>::to_vec)
                        .ok_or_else(|| CliError::InvalidResult(format!("missing column {name}")))
                } else if let Some(name) = r.strip_prefix("summary:") {
                    t.summary
                        .get(name)
                        .map(|&x| vec![x])
                        .ok_or_else(|| CliError::InvalidResult(format!("missing summary entry {name}")))
                } else {
                    Err(CliError::InvalidResult(format!("operand {r:?} is neither column:… nor summary:…")))
                }
            }
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Literal(x) => write!(f, "{x}"),
            Operand::Ref(r) => f.write_str(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    /// `max |a − b| ≤ tol`, broadcasting scalars.
    MaxAbsDiff { a: Operand, b: Operand, tol: f64 },
    /// `a ≤ b + tol` elementwise.
    Le {
        a: Operand,
        b: Operand,
        #[serde(default)]
        tol: f64,
    },
    /// `min ≤ a ≤ max` elementwise.
    Range { a: Operand, min: f64, max: f64 },
    /// `1/factor ≤ a/b ≤ factor` elementwise.
    RatioWithin { a: Operand, b: Operand, factor: f64 },
}

fn pairs(a: &[f64], b: &[f64]) -> Result<Vec<(f64, f64)>> {
    match (a.len(), b.len()) {
        (1, _) => Ok(b.iter().map(|&y| (a[0], y)).collect()),
        (_, 1) => Ok(a.iter().map(|&x| (x, b[0])).collect()),
        (m, n) if m == n => Ok(a.iter().copied().zip(b.iter().copied()).collect()),
        (m, n) => Err(CliError::InvalidResult(format!("operands have {m} and {n} values"))),
    }
}

impl Check {
    /// `Ok(None)` on pass, `Ok(Some(reason))` on failure.
    pub fn evaluate(&self, t: &ResultTable) -> Result<Option<String>> {
        let fail = |ok: bool, msg: String| Ok((!ok).then_some(msg));
        match self {
            Check::MaxAbsDiff { a, b, tol } => {
                let p = pairs(&a.resolve(t)?, &b.resolve(t)?)?;
                let worst = p.iter().map(|(x, y)| (x - y).abs()).fold(0.0, |m: f64, d| if d.is_nan() { f64::NAN } else { m.max(d) });
                fail(worst <= *tol, format!("max |{a} − {b}| = {worst:.4e} > {tol}"))
            }
            Check::Le { a, b, tol } => {
                let p = pairs(&a.resolve(t)?, &b.resolve(t)?)?;
                let excess = p.iter().map(|(x, y)| x - y).fold(f64::NEG_INFINITY, |m: f64, d| if d.is_nan() { f64::NAN } else { m.max(d) });
                fail(excess <= *tol, format!("max({a} − {b}) = {excess:.4e} > {tol}"))
            }
            Check::Range { a, min, max } => {
                let v = a.resolve(t)?;
                let bad: Vec<f64> = v.into_iter().filter(|x| !(*x >= *min && *x <= *max)).collect();
                fail(bad.is_empty(), format!("{a} has {} value(s) outside [{min}, {max}], first {:.4}", bad.len(), bad.first().copied().unwrap_or(f64::NAN)))
            }
            Check::RatioWithin { a, b, factor } => {
                let p = pairs(&a.resolve(t)?, &b.resolve(t)?)?;
                let bad = p.iter().map(|(x, y)| x / y).find(|r| !(*r >= 1.0 / factor && *r <= *factor));
                fail(bad.is_none(), format!("{a}/{b} = {:.4} outside factor {factor}", bad.unwrap_or(f64::NAN)))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    pub title: String,
    pub preset: Preset,
    /// Parameters the run must use; applied on top of the preset defaults.
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriteriaFile {
    pub criteria: Vec<Criterion>,
}

impl CriteriaFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub id: String,
    pub title: String,
    pub failures: Vec<String>,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.id, self.title)?;
        for m in &self.failures {
            write!(f, "\n    {m}")?;
        }
        Ok(())
    }
}

pub fn verify_criterion(result: &ResultTable, c: &Criterion) -> Result<CriterionReport> {
    let mut failures = Vec::new();
    for check in &c.checks {
        if let Some(m) = check.evaluate(result)? {
            failures.push(m);
        }
    }
    Ok(CriterionReport { id: c.id.clone(), title: c.title.clone(), failures })
}

/// Evaluates every criterion written for the result's preset.
pub fn verify(result: &ResultTable, criteria: &CriteriaFile) -> Result<Vec<CriterionReport>> {
    let applicable: Vec<&Criterion> = criteria.criteria.iter().filter(|c| c.preset == result.metadata.preset).collect();
    if applicable.is_empty() {
        return Err(CliError::InvalidResult(format!("no criterion applies to preset {}", result.metadata.preset)));
    }
    applicable.into_iter().map(|c| verify_criterion(result, c)).collect()
}

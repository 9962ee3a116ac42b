//! Presets, their default parameters and config resolution.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    QsdCurves,
    DetBounds,
    MiCurves,
    EnsembleCompare,
    SlpGap,
    Packing,
    Relaxation,
    NdfScaling,
    Localization,
    Petz,
    Hamming,
    Heatmap,
    Born,
    Snr,
    Concentration,
    Properties,
}

impl Preset {
    pub const ALL: [Preset; 16] = [
        Preset::QsdCurves,
        Preset::DetBounds,
        Preset::MiCurves,
        Preset::EnsembleCompare,
        Preset::SlpGap,
        Preset::Packing,
        Preset::Relaxation,
        Preset::NdfScaling,
        Preset::Localization,
        Preset::Petz,
        Preset::Hamming,
        Preset::Heatmap,
        Preset::Born,
        Preset::Snr,
        Preset::Concentration,
        Preset::Properties,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::QsdCurves => "qsd-curves",
            Preset::DetBounds => "det-bounds",
            Preset::MiCurves => "mi-curves",
            Preset::EnsembleCompare => "ensemble-compare",
            Preset::SlpGap => "slp-gap",
            Preset::Packing => "packing",
            Preset::Relaxation => "relaxation",
            Preset::NdfScaling => "ndf-scaling",
            Preset::Localization => "localization",
            Preset::Petz => "petz",
            Preset::Hamming => "hamming",
            Preset::Heatmap => "heatmap",
            Preset::Born => "born",
            Preset::Snr => "snr",
            Preset::Concentration => "concentration",
            Preset::Properties => "properties",
        }
    }

    /// Figure whose dataset the preset regenerates.
    pub fn figure(self) -> &'static str {
        match self {
            Preset::QsdCurves => "Fig. 2",
            Preset::DetBounds => "Fig. 1",
            Preset::MiCurves => "Fig. 4",
            Preset::EnsembleCompare => "Fig. 5",
            Preset::SlpGap => "Fig. 3",
            Preset::Packing => "packing bounds",
            Preset::Relaxation => "Fig. averages",
            Preset::NdfScaling => "Fig. 6",
            Preset::Localization => "Fig. dec loc",
            Preset::Petz => "Fig. Petz",
            Preset::Hamming => "Fig. Hamming",
            Preset::Heatmap => "Fig. heat map",
            Preset::Born => "Fig. Born neq",
            Preset::Snr => "Fig. SNR",
            Preset::Concentration => "concentration bounds",
            Preset::Properties => "property checks",
        }
    }

    pub fn defaults(self) -> BTreeMap<String, Value> {
        let grid: Vec<f64> = (1..=10).map(|k| k as f64 / 10.0).collect();
        let v = match self {
            Preset::QsdCurves => json!({"d": 500, "gamma_grid": grid, "family": "haar"}),
            Preset::DetBounds => json!({"d": 400, "gamma_grid": grid, "wishart": true}),
            Preset::MiCurves => json!({"d": 500, "gamma_grid": grid}),
            Preset::EnsembleCompare => json!({
                "d": 400, "mub_d": 101, "gamma_grid": grid, "families": ["perm", "sign", "mub"]
            }),
            Preset::SlpGap => json!({"d": 400, "gamma_grid": grid, "n_slope": [50, 100, 200, 400], "slope_gamma": 1.0, "realizations": 4}),
            Preset::Packing => json!({
                "dims": [10, 20, 50, 100, 600], "epsilons": [0.1, 0.2, 0.3, 0.4, 0.5],
                "greedy_max_d": 20, "budget": 5000
            }),
            Preset::Relaxation => json!({"d0": 200, "dt": "eq", "steps": 80, "t_max_tau": 10.0}),
            Preset::NdfScaling => json!({"d0s": [20, 200], "length": 10, "dt": "eq"}),
            Preset::Localization => json!({
                "d0s": [20, 200], "length": 100, "count": 1000, "dt": "eq", "fraction": 0.2, "bins": 10
            }),
            Preset::Petz => json!({"d0": 20, "length": 8, "dt": "eq"}),
            Preset::Hamming => json!({"d0": 200, "length": 10, "dt": "eq"}),
            Preset::Heatmap => json!({"d0": 200, "length": 10, "dt": "eq"}),
            Preset::Born => json!({
                "d0": 200, "length": 200, "dt": "neq", "threshold": 0.1, "markov_samples": 100
            }),
            Preset::Snr => json!({"d0s": [20, 200], "length": 10, "dt": "eq"}),
            Preset::Concentration => json!({
                "dims": [600, 6000], "epsilons": [0.05, 0.1], "draws": 2000,
                "ks_dim": 50, "ks_samples": 100000
            }),
            Preset::Properties => json!({"d0": 20, "length": 5, "steps": 200, "markov_length": 200}),
        };
        match v {
            Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!("defaults are objects"),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| CliError::InvalidConfig(format!("unknown experiment {s:?}")))
    }
}

/// A preset with every parameter resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(preset: Preset, seed: u64) -> Self {
        ExperimentConfig { preset, params: preset.defaults(), seed }
    }

    /// Overrides one parameter from its command-line text. The text is
    /// coerced to the type of the default: numbers, booleans, strings, or
    /// comma-separated lists. A list default also accepts `a:b:steps`.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let default = self
            .params
            .get(key)
            .ok_or_else(|| CliError::InvalidConfig(format!("{} has no parameter {key:?}", self.preset)))?;
        let value = coerce(default, text).map_err(|e| CliError::InvalidConfig(format!("{key}: {e}")))?;
        self.params.insert(key.to_string(), value);
        Ok(())
    }

    /// Like [`set`](Self::set) for an already-typed JSON value.
    pub fn set_value(&mut self, key: &str, value: Value) -> Result<()> {
        match value {
            Value::String(s) => self.set(key, &s),
            Value::Array(a) if a.iter().all(|v| v.is_number() || v.is_string()) => {
                let text: Vec<String> =
                    a.iter().map(|v| v.as_str().map_or_else(|| v.to_string(), String::from)).collect();
                self.set(key, &text.join(","))
            }
            other => self.set(key, &other.to_string()),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.params.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.params.get(key).ok_or_else(|| CliError::InvalidConfig(format!("missing parameter {key:?}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.get(key)?.as_f64().ok_or_else(|| CliError::InvalidConfig(format!("{key} is not a number")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.as_u64()
            .map(|x| x as usize)
            .ok_or_else(|| CliError::InvalidConfig(format!("{key} = {v} is not a nonnegative integer")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.get(key)?.as_bool().ok_or_else(|| CliError::InvalidConfig(format!("{key} is not a boolean")))
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.get(key)?.as_str().ok_or_else(|| CliError::InvalidConfig(format!("{key} is not a string")))
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let a = self.get(key)?.as_array().ok_or_else(|| CliError::InvalidConfig(format!("{key} is not a list")))?;
        a.iter().map(|v| v.as_f64().ok_or_else(|| CliError::InvalidConfig(format!("{key} has a non-number")))).collect()
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let a = self.get(key)?.as_array().ok_or_else(|| CliError::InvalidConfig(format!("{key} is not a list")))?;
        a.iter()
            .map(|v| v.as_u64().map(|x| x as usize).ok_or_else(|| CliError::InvalidConfig(format!("{key} has a non-integer"))))
            .collect()
    }

    pub fn str_list(&self, key: &str) -> Result<Vec<String>> {
        let a = self.get(key)?.as_array().ok_or_else(|| CliError::InvalidConfig(format!("{key} is not a list")))?;
        a.iter()
            .map(|v| v.as_str().map(String::from).ok_or_else(|| CliError::InvalidConfig(format!("{key} has a non-string"))))
            .collect()
    }
}

/// Expands `a:b:steps` into `steps` evenly spaced points from `a` to `b`.
pub fn parse_grid(text: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid {text:?} is not a:b:steps"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| format!("bad grid start {:?}", parts[0]))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| format!("bad grid end {:?}", parts[1]))?;
    let steps: usize = parts[2].trim().parse().map_err(|_| format!("bad grid steps {:?}", parts[2]))?;
    match steps {
        0 => Err("grid needs at least one step".into()),
        1 => Ok(vec![a]),
        _ => Ok((0..steps).map(|k| a + (b - a) * k as f64 / (steps - 1) as f64).collect()),
    }
}

fn number(text: &str, integer: bool) -> std::result::Result<Value, String> {
    let t = text.trim();
    if integer {
        if let Ok(u) = t.parse::<u64>() {
            return Ok(json!(u));
        }
    }
    let x: f64 = t.parse().map_err(|_| format!("{t:?} is not a number"))?;
    if integer {
        return Err(format!("{t:?} is not a nonnegative integer"));
    }
    serde_json::Number::from_f64(x).map(Value::Number).ok_or_else(|| format!("{t:?} is not finite"))
}

fn coerce(default: &Value, text: &str) -> std::result::Result<Value, String> {
    match default {
        Value::Bool(_) => text.trim().parse::<bool>().map(Value::Bool).map_err(|_| format!("{text:?} is not a boolean")),
        Value::Number(n) => number(text, n.is_u64()),
        Value::String(_) => Ok(Value::String(text.trim().to_string())),
        Value::Array(a) => {
            let strings = a.first().is_some_and(Value::is_string);
            let integer = !a.is_empty() && a.iter().all(|v| v.is_u64());
            if !strings && text.contains(':') {
                return Ok(Value::Array(parse_grid(text)?.into_iter().map(|x| json!(x)).collect()));
            }
            text.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| if strings { Ok(Value::String(s.trim().to_string())) } else { number(s, integer) })
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Value::Array)
        }
        _ => Err("parameter has no coercible default".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expansion() {
        assert_eq!(parse_grid("0.1:1:10").unwrap().len(), 10);
        assert_eq!(parse_grid("2:2:1").unwrap(), vec![2.0]);
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn coercion_follows_default_type() {
        let mut c = ExperimentConfig::new(Preset::NdfScaling, 1);
        c.set("d0s", "20,200,2000").unwrap();
        assert_eq!(c.usize_list("d0s").unwrap(), vec![20, 200, 2000]);
        c.set("length", "12").unwrap();
        assert_eq!(c.usize("length").unwrap(), 12);
        assert!(c.set("length", "1.5").is_err());
        assert!(c.set("nope", "1").is_err());
        let mut q = ExperimentConfig::new(Preset::QsdCurves, 1);
        q.set("gamma_grid", "0.5:1:2").unwrap();
        assert_eq!(q.f64_list("gamma_grid").unwrap(), vec![0.5, 1.0]);
        q.set_value("d", json!(250)).unwrap();
        assert_eq!(q.usize("d").unwrap(), 250);
        let mut e = ExperimentConfig::new(Preset::EnsembleCompare, 1);
        e.set_value("families", json!(["perm", "mub"])).unwrap();
        assert_eq!(e.str_list("families").unwrap(), vec!["perm", "mub"]);
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
            assert_eq!(serde_json::to_value(p).unwrap(), json!(p.name()));
        }
    }
}

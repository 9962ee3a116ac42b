//! Result tables and their CSV/JSON serialization.
//!
//! A CSV file starts with one `#`-prefixed line holding the metadata and
//! summary as JSON, followed by a header row and the data rows. The same
//! metadata and summary are written to a `.json` sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Preset};
use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub preset: Preset,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub config_hash: String,
    pub timestamp: u64,
    pub tool_version: String,
}

impl Metadata {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Metadata {
            preset: config.preset,
            params: config.params.clone(),
            seed: config.seed,
            config_hash: config_hash(config),
            timestamp,
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn config(&self) -> ExperimentConfig {
        ExperimentConfig { preset: self.preset, params: self.params.clone(), seed: self.seed }
    }
}

/// SHA-256 of the canonical JSON of `(preset, params, seed, version)`.
pub fn config_hash(config: &ExperimentConfig) -> String {
    // BTreeMap keys serialize in sorted order, which makes this canonical.
    let canon = serde_json::json!({
        "preset": config.preset,
        "params": config.params,
        "seed": config.seed,
        "tool_version": TOOL_VERSION,
    });
    let digest = Sha256::digest(canon.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    metadata: Metadata,
    #[serde(with = "finite_map")]
    summary: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub metadata: Metadata,
    columns: Vec<(String, Vec<f64>)>,
    pub summary: BTreeMap<String, f64>,
}

impl ResultTable {
    pub fn new(metadata: Metadata) -> Self {
        ResultTable { metadata, columns: Vec::new(), summary: BTreeMap::new() }
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |(_, c)| c.len())
    }

    pub fn add_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if self.columns.iter().any(|(n, _)| n == name) {
            return Err(CliError::InvalidResult(format!("duplicate column {name}")));
        }
        if !self.columns.is_empty() && values.len() != self.n_rows() {
            return Err(CliError::InvalidResult(format!(
                "column {name} has {} rows, table has {}",
                values.len(),
                self.n_rows()
            )));
        }
        self.columns.push((name.to_string(), values));
        Ok(())
    }

    /// Builds the columns from rows of equal width.
    pub fn set_rows(&mut self, names: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        for (k, name) in names.iter().enumerate() {
            let col = rows
                .iter()
                .map(|r| r.get(k).copied().ok_or_else(|| CliError::InvalidResult(format!("short row for {name}"))))
                .collect::<Result<Vec<f64>>>()?;
            self.add_column(name, col)?;
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn column_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        self.columns.iter_mut().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn set_summary(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    fn header_json(&self) -> Result<String> {
        let h = Header { metadata: self.metadata.clone(), summary: self.summary.clone() };
        Ok(serde_json::to_string(&h)?)
    }

    /// Header row and data rows, without the metadata line.
    pub fn csv_body(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|(n, _)| n.as_str()))?;
        for i in 0..self.n_rows() {
            w.write_record(self.columns.iter().map(|(_, c)| format_value(c[i])))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| CliError::InvalidResult(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        Ok(format!("# {}\n{}", self.header_json()?, self.csv_body()?))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let first = text.lines().next().ok_or_else(|| CliError::InvalidResult("empty result file".into()))?;
        let json = first
            .strip_prefix('#')
            .ok_or_else(|| CliError::InvalidResult("missing metadata line".into()))?;
        let header: Header =
            serde_json::from_str(json.trim()).map_err(|e| CliError::InvalidResult(format!("metadata: {e}")))?;
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let names: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(CliError::InvalidResult(format!("row has {} fields, expected {}", rec.len(), names.len())));
            }
            for (k, field) in rec.iter().enumerate() {
                let x = field
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::InvalidResult(format!("column {}: {field:?} is not a number", names[k])))?;
                cols[k].push(x);
            }
        }
        Ok(ResultTable { metadata: header.metadata, columns: names.into_iter().zip(cols).collect(), summary: header.summary })
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the CSV and its JSON sidecar.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut f = fs::File::create(csv_path)?;
        f.write_all(self.to_csv_string()?.as_bytes())?;
        let h = Header { metadata: self.metadata.clone(), summary: self.summary.clone() };
        fs::write(Self::sidecar_path(csv_path), serde_json::to_string_pretty(&h)? + "\n")?;
        Ok(())
    }

    pub fn read(csv_path: &Path) -> Result<Self> {
        Self::from_csv_str(&fs::read_to_string(csv_path)?)
    }
}

/// Shortest round-trip representation; integers print without a fraction.
fn format_value(x: f64) -> String {
    if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

/// JSON has no infinities or NaN: non-finite summary values become `null`
/// and read back as NaN.
mod finite_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let o: BTreeMap<&String, Option<f64>> = m.iter().map(|(k, &v)| (k, v.is_finite().then_some(v))).collect();
        o.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let o: BTreeMap<String, Option<f64>> = BTreeMap::deserialize(d)?;
        Ok(o.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        let mut t = ResultTable::new(Metadata::for_config(&ExperimentConfig::new(Preset::DetBounds, 7)));
        t.add_column("gamma", vec![0.1, 0.2]).unwrap();
        t.add_column("n", vec![40.0, 80.0]).unwrap();
        t.set_summary("max_abs_dev", 0.01);
        t.set_summary("blown_up", f64::INFINITY);
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let back = ResultTable::from_csv_str(&t.to_csv_string().unwrap()).unwrap();
        assert_eq!(back.metadata, t.metadata);
        assert_eq!(back.column("gamma").unwrap(), &[0.1, 0.2]);
        assert_eq!(back.column_names(), vec!["gamma", "n"]);
        assert!(back.summary["blown_up"].is_nan());
    }

    #[test]
    fn unequal_columns_rejected() {
        let mut t = sample();
        assert!(t.add_column("short", vec![1.0]).is_err());
        assert!(t.add_column("gamma", vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn hash_ignores_timestamp() {
        let c = ExperimentConfig::new(Preset::Born, 3);
        let mut a = Metadata::for_config(&c);
        let b = Metadata::for_config(&c);
        a.timestamp += 100;
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(config_hash(&c), config_hash(&ExperimentConfig::new(Preset::Born, 4)));
    }
}

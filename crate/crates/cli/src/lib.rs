//! Config-driven experiment runner: presets, result tables, verification
//! against tolerance criteria and eigendecomposition checkpoints.

pub mod cache;
pub mod config;
pub mod error;
pub mod presets;
pub mod table;
pub mod verify;

pub use config::{ExperimentConfig, Preset};
pub use error::{CliError, Result};
pub use presets::run;
pub use table::{Metadata, ResultTable};
pub use verify::{verify, CriteriaFile, Criterion, CriterionReport};

/// `(name, figure, default parameters as JSON)` for every preset.
pub fn list_presets() -> Vec<(&'static str, &'static str, String)> {
    Preset::ALL
        .iter()
        .map(|p| (p.name(), p.figure(), serde_json::to_string(&p.defaults()).expect("defaults serialize")))
        .collect()
}

/// Sizes the rayon pool. Results do not depend on the count.
pub fn set_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::InvalidConfig(format!("thread pool: {e}")))
}

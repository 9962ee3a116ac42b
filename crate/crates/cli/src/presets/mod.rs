//! One function per preset. Each reads its resolved parameters, runs the
//! experiment through the core crate and fills a [`ResultTable`].

mod checks;
mod geometry;
mod histories;
mod qsd;

use std::sync::Arc;

use decohist_core::ensembles::{haar_family, mub_family, permutation_family, sign_family};
use decohist_core::histories::{initial_state, tau, InitialKind};
use decohist_core::seeds::derive_seed;
use decohist_core::{DigitStream, Error as CoreError, ModelParams, ModelSpec, StateFamily, StateVector};

use crate::cache;
use crate::config::{ExperimentConfig, Preset};
use crate::error::{CliError, Result};
use crate::table::{Metadata, ResultTable};

/// Dense storage the runner will attempt before refusing a configuration.
pub const MEMORY_BUDGET_BYTES: f64 = 4.0 * 1024.0 * 1024.0 * 1024.0;

/// Runs `config` and returns its table. Deterministic for a given config.
///
/// OpenBLAS rounds differently with different thread counts, so BLAS is
/// pinned to one thread here; parallelism comes from the rayon pool.
pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    decohist_core::linalg::set_blas_threads(1);
    let mut t = ResultTable::new(Metadata::for_config(config));
    match config.preset {
        Preset::QsdCurves => qsd::qsd_curves(config, &mut t)?,
        Preset::DetBounds => qsd::det_bounds(config, &mut t)?,
        Preset::MiCurves => qsd::mi_curves(config, &mut t)?,
        Preset::EnsembleCompare => qsd::ensemble_compare(config, &mut t)?,
        Preset::SlpGap => qsd::slp_gap(config, &mut t)?,
        Preset::Packing => geometry::packing(config, &mut t)?,
        Preset::Concentration => geometry::concentration(config, &mut t)?,
        Preset::Relaxation => histories::relaxation(config, &mut t)?,
        Preset::NdfScaling => histories::ndf_scaling(config, &mut t)?,
        Preset::Localization => histories::localization(config, &mut t)?,
        Preset::Petz => histories::petz(config, &mut t)?,
        Preset::Hamming => histories::hamming(config, &mut t)?,
        Preset::Heatmap => histories::heatmap(config, &mut t)?,
        Preset::Born => histories::born(config, &mut t)?,
        Preset::Snr => histories::snr(config, &mut t)?,
        Preset::Properties => checks::properties(config, &mut t)?,
    }
    Ok(t)
}

pub(crate) fn ensure_fits(bytes: f64, what: &str) -> Result<()> {
    if bytes > MEMORY_BUDGET_BYTES {
        return Err(CliError::Core(CoreError::TooLarge(format!(
            "memory: {what} needs {:.1} GiB, budget is {:.1} GiB",
            bytes / 1024f64.powi(3),
            MEMORY_BUDGET_BYTES / 1024f64.powi(3)
        ))));
    }
    Ok(())
}

/// `N = round(γ·d)`, at least 2.
pub(crate) fn count_for(gamma: f64, d: usize) -> Result<usize> {
    if !(gamma > 0.0) {
        return Err(CliError::InvalidConfig(format!("gamma {gamma} must be positive")));
    }
    Ok(((gamma * d as f64).round() as usize).max(2))
}

pub(crate) fn family(name: &str, d: usize, n: usize, seed: u64) -> Result<StateFamily> {
    ensure_fits(16.0 * d as f64 * n as f64 * 3.0, &format!("{name} family of {n} states in dimension {d}"))?;
    let s = derive_seed(seed, &format!("family:{name}"));
    Ok(match name {
        "haar" => haar_family(d, n, s)?,
        "perm" => permutation_family(d, n, s)?,
        "sign" => sign_family(d, n, &mut DigitStream::pi())?,
        "mub" => mub_family(d, n, s)?,
        other => return Err(CliError::InvalidConfig(format!("unknown family {other:?}"))),
    })
}

pub(crate) fn family_code(name: &str) -> f64 {
    match name {
        "haar" => 0.0,
        "perm" => 1.0,
        "sign" => 2.0,
        "mub" => 3.0,
        _ => f64::NAN,
    }
}

pub(crate) fn model(config: &ExperimentConfig, d0: usize) -> Result<Arc<ModelSpec>> {
    if d0 == 0 {
        return Err(CliError::InvalidConfig("d0 must be positive".into()));
    }
    let d = 3.0 * d0 as f64;
    // Hamiltonian, eigenvectors and the solver workspace.
    ensure_fits(3.0 * 8.0 * d * d, &format!("eigendecomposition of dimension {}", 3 * d0))?;
    cache::model(ModelParams::new(d0, derive_seed(config.seed, "model")))
}

/// Time step preset: `eq` is 8τ, `neq` is τ/2, a number is a multiple of τ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Step {
    Eq,
    Neq,
    Tau(f64),
}

impl Step {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "eq" => Ok(Step::Eq),
            "neq" => Ok(Step::Neq),
            t => match t.parse::<f64>() {
                Ok(x) if x > 0.0 && x.is_finite() => Ok(Step::Tau(x)),
                _ => Err(CliError::InvalidConfig(format!("dt {t:?} is not eq, neq or a positive multiple of tau"))),
            },
        }
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        Step::parse(config.str("dt")?)
    }

    pub fn dt(self, m: &ModelSpec) -> f64 {
        let t = tau(m);
        match self {
            Step::Eq => 8.0 * t,
            Step::Neq => 0.5 * t,
            Step::Tau(x) => x * t,
        }
    }

    /// Start in `H1` for the equilibrium protocol, in an energy eigenstate
    /// for the nonequilibrium one.
    pub fn initial_kind(self) -> InitialKind {
        match self {
            Step::Neq => InitialKind::RandomEigenstate,
            _ => InitialKind::HaarInH1,
        }
    }
}

pub(crate) fn initial(config: &ExperimentConfig, m: &ModelSpec, kind: InitialKind) -> Result<StateVector> {
    Ok(initial_state(m, kind, derive_seed(config.seed, "initial"))?)
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

//! Random history ensembles, quantum state discrimination bounds and a
//! block random-matrix model for studying approximate decoherence of long
//! histories.

pub mod digits;
pub mod discrimination;
pub mod ensembles;
pub mod error;
pub mod histories;
pub mod linalg;
pub mod packing;
pub mod quad;
pub mod rmt;
pub mod seeds;
pub mod stats;

pub use digits::DigitStream;
pub use discrimination::{JointTable, SlpSolution, SqrtMeasurement};
pub use ensembles::{GramMatrix, Provenance, StateFamily, StateVector, WeightVector};
pub use error::{Error, Result};
pub use histories::{BranchStates, HistoryLabel, HistorySet, ModelParams, ModelSpec};
pub use num_complex::Complex64 as C64;
pub use rmt::{MpLaw, SpectralFit};

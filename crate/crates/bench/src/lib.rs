//! Fixtures shared by the benchmarks.

use decohist_core::histories::{initial_state, InitialKind};
use decohist_core::{ModelParams, ModelSpec, StateVector};

/// Default two-block model with `D = 3·d0` and an equilibrium initial state.
pub fn model_with_state(d0: usize) -> (ModelSpec, StateVector) {
    let m = ModelSpec::from_params(ModelParams::new(d0, 1)).expect("valid model");
    let psi = initial_state(&m, InitialKind::HaarInH1, 2).expect("valid state");
    (m, psi)
}

//! The two-block random-matrix model, its histories and the statistics built
//! on them.

pub mod analysis;
pub mod branches;
pub mod consistency;
pub mod dilation;
pub mod labels;
pub mod model;

pub use analysis::*;
pub use branches::*;
pub use consistency::*;
pub use dilation::*;
pub use labels::*;
pub use model::*;

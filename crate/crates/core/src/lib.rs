//! Community recovery and detection experiments for sparse block models with
//! many communities.

pub mod align;
pub mod detection;
pub mod error;
pub mod graph;
pub mod harness;
pub mod it_recovery;
pub mod lowdeg;
pub mod nbwalk;
pub mod params;
pub mod recovery;
pub mod sample;

pub use error::{Error, Result};
pub use graph::{GraphSample, Labeling, ModelTag};
pub use params::{classify_regime, invert_params, ModelParams, Regime, RegimeKind};

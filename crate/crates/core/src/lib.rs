//! Behavioral model of a three-timescale mixed-feedback current-mode neuron:
//! vector field, fixed-step integration, spike and burst extraction,
//! steady-state curve analysis and device-level parameter mapping.

pub mod analysis;
pub mod device;
pub mod dynamics;
mod error;
pub mod model;
pub mod presets;

pub use error::{Error, Result};

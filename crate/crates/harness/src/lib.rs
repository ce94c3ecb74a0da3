//! Command-line harness: scenario files, batch runs and text exports.

mod error;
pub mod io;
pub mod run;
pub mod scenario;

pub use error::{HarnessError, Result};

//! Command-line front end for `fdout-core`: CSV input, JSON reports and SVG
//! plots. Curve indices are 1-based in every file this crate writes.

pub mod commands;
pub mod error;
pub mod io;
pub mod plot;
pub mod report;

pub use commands::{detect, run, DetectConfig, MethodConfig};
pub use error::{CliError, CliResult};
pub use report::DetectionReport;

//! Experiment harness for `nls-core`: configuration, drivers, file formats.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod output;
pub mod scaling;

/// Code version recorded in every manifest.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

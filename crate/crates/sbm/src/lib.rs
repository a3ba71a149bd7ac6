//! Command-line experiments for skew Brownian motion: CSV artifacts,
//! config files, parallel Monte Carlo drivers and validation suites built
//! on `sbm-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod fexpr;
pub mod formats;
pub mod mc;
pub mod validate;

pub use error::{CliError, CliResult};

//! File formats, configuration and the pipeline driver behind the
//! `stockevents` command.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod pipeline;

pub use cli::run_cli;
pub use config::{ModelKind, RunConfig};
pub use error::{CliError, Result};

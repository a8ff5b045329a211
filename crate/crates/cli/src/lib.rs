//! Command-line front end for the pathway inference library.

pub mod args;
pub mod codec;
pub mod config;
pub mod error;
pub mod run;

pub use error::{CliError, CliResult};
pub use run::{run_args, run_cli, RunManifest};

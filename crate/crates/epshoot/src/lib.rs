//! File formats, plots, parallel sweeps and the `epshoot` command-line tool
//! on top of [`epshoot_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod svg;
pub mod sweep;

pub use error::{CliError, CliResult};

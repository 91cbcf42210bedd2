//! Library side of the `squeezelab` command-line tool: configuration
//! loading, CSV artifacts and the command implementations.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;

pub use artifact::CsvArtifact;
pub use config::{Model, RunConfig};
pub use error::CliError;

//! Configuration, caching and output plumbing behind the `tjent` binary.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use cache::{GroundStateCache, CACHE_DIR_ENV};
pub use commands::Context;
pub use config::RunConfig;
pub use error::{CliError, CliResult};

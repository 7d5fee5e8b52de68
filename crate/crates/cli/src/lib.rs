//! Config-driven experiment runner for `dqdmeas-core`.

pub mod config;
pub mod runner;
pub mod scenario;

pub use config::{Mode, RunConfig};
pub use runner::{run, validate, RunOutput};
pub use scenario::scenario;

/// Environment variable overriding the number of worker threads.
pub const THREADS_ENV: &str = "DQDMEAS_THREADS";

//! Configuration, run directories and the command-line subcommands.

pub mod commands;
pub mod config;
pub mod plots;
pub mod store;

pub use commands::{
    analyze, exit, plot, simulate, status_exit_code, sweep, verify, Claim, HarnessError, SweepManifest,
};
pub use config::{ConfigError, RunConfig};
pub use store::{load_run, Manifest, StoreError};

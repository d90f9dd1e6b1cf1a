//! Command-line companion of `splitree-core`: JSON configuration, CSV and
//! JSON output, parallel replication and the validation suites.

pub mod commands;
pub mod config;
pub mod output;
pub mod replicate;
pub mod suites;

pub use config::RunConfig;
pub use suites::{run_suite, Context, Suite};

//! File formats, reports and the `nifb` command line for `ni-freebody`.

pub mod analysis;
pub mod cli;
pub mod commands;
pub mod error;
pub mod model;
pub mod report;

pub use analysis::run_analysis;
pub use commands::execute;
pub use error::CliError;

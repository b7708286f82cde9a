//! Scenario parsing, result files and subcommands of the `risdeploy` tool.

pub mod commands;
pub mod output;
pub mod scenario;

pub use commands::{run, Cli, Failure};
pub use scenario::ScenarioFile;

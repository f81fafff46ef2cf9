//! Command-line front end for the `qcausal` toolkit: spec files in, reports out.

pub mod commands;
pub mod error;
pub mod report;
pub mod spec;

pub use commands::{run_command, Command, RunOptions};
pub use error::CliError;
pub use report::RunReport;
pub use spec::{parse_spec, print_spec, AlgebraPairSpec};

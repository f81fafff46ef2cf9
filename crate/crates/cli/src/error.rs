use thiserror::Error;

/// Everything that can stop a run before a report is produced.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("{path}: {message}")]
    Field { path: String, message: String },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] qcausal_core::Error),
}

impl CliError {
    /// Every error of this type is an input error.
    pub const EXIT_CODE: i32 = 2;
}

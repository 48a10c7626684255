use thiserror::Error;

/// Failure classes with distinct exit codes: bad configs exit 2, runtime
/// (numerical or I/O) failures exit 3 and leave a diagnostic file.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self::Numerical(msg.into())
    }
}

/// Shorthand for mapping library errors onto the runtime-failure exit path.
pub fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

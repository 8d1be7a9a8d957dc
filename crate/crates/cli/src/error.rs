use thiserror::Error;

/// Failure classes of the runner; each maps to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }

    /// Classifies a library error, prefixing the sweep point it came from.
    pub fn from_model(err: d2d_eh::Error, context: &str) -> Self {
        match err {
            d2d_eh::Error::Config(_) | d2d_eh::Error::Domain(_) => {
                CliError::Config(format!("{context}: {err}"))
            }
            _ => CliError::Numerical(format!("{context}: {err}")),
        }
    }
}

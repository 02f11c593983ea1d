use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(#[from] kerrcat::Error),

    #[error("{0}")]
    Check(String),
}

impl CliError {
    /// Process exit code: 1 for configuration and I/O, 2 for numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) | CliError::Check(_) => 2,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }
}

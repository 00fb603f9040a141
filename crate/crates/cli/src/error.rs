use std::fmt;

use tailprice::TailError;

/// Everything that ends a run with exit status 2.
#[derive(Debug)]
pub enum CliError {
    Core(TailError),
    Usage(String),
    Config(String),
    Io { path: String, message: String },
}

impl CliError {
    /// Stable diagnostic code printed as `error[CODE]`.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "E-USAGE",
            CliError::Config(_) => "E-CONFIG",
            CliError::Io { .. } => "E-IO",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Config(m) => f.write_str(m),
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
        }
    }
}

impl From<TailError> for CliError {
    fn from(e: TailError) -> Self {
        CliError::Core(e)
    }
}

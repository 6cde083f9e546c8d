use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or grid.
    Config(String),
    Io(String),
    /// A stationary solve broke down.
    Solver(String),
    /// Some analysis did not converge; outputs were still written.
    NotConverged(usize),
    /// Some validation check failed; outputs were still written.
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) | CliError::NotConverged(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::NotConverged(n) => write!(f, "{n} analysis point(s) did not converge"),
            CliError::ValidationFailed(n) => write!(f, "{n} validation check(s) failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<wpsched::Error> for CliError {
    fn from(e: wpsched::Error) -> Self {
        match e {
            wpsched::Error::Solver { .. } | wpsched::Error::NotConverged { .. } | wpsched::Error::Numeric(_) => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

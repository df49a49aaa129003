//! Command-line surface for `tailwedge`: argument parsing, the `key = value`
//! config file, CSV emission, and the acceptance suite behind `validate`.

pub mod args;
pub mod commands;
pub mod config;
pub mod csv;
pub mod validate;

use std::fmt;

/// A command failure, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments; exit code 2.
    Usage(String),
    /// Numerical or domain failure; exit code 3.
    Numeric(String),
    /// At least one acceptance criterion failed; exit code 1.
    Validation,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => f.write_str(m),
            CliError::Validation => f.write_str("validation failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<tailwedge::Error> for CliError {
    fn from(e: tailwedge::Error) -> Self {
        use tailwedge::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::BelowMean { .. }
            | E::PreconditionViolated(_)
            | E::InvalidDt { .. }
            | E::InvalidConfig(_)
            | E::PTooCloseToCritical { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

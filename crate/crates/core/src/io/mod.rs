//! File formats, configuration, and the command layer behind the `agrf` CLI.

pub mod commands;
pub mod config;
pub mod model_file;
pub mod observations;
pub mod reproduce;

use thiserror::Error;

use crate::datagen::DataGenError;
use crate::field::FieldError;
use crate::inference::InferenceError;

/// Exit codes of the CLI: every failure maps to exactly one of these.
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// A failure with its exit-code category.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable files, malformed CSV/TOML/JSON, bad flag syntax.
    #[error("{0}")]
    Parse(String),
    /// Structurally valid input that violates a contract (empty data,
    /// duplicate noiseless rows, mismatched grids, unsupported orders).
    #[error("{0}")]
    Validation(String),
    /// Factorization failures, optimizer failures, solver blow-ups.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        CliError::Parse(message.into())
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError::Numerical(message.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Parse(format!("i/o error: {err}"))
    }
}

impl From<FieldError> for CliError {
    fn from(err: FieldError) -> Self {
        match err {
            FieldError::FactorizationFailed { .. } | FieldError::NonFiniteKernelValue { .. } => {
                CliError::Numerical(err.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(err: InferenceError) -> Self {
        match err {
            InferenceError::Field(field) => field.into(),
            InferenceError::Kernel(_) | InferenceError::UnsupportedOrder { .. } => {
                CliError::Validation(err.to_string())
            }
            InferenceError::LikelihoodUndefined | InferenceError::AllRestartsFailed { .. } => {
                CliError::Numerical(err.to_string())
            }
        }
    }
}

impl From<DataGenError> for CliError {
    fn from(err: DataGenError) -> Self {
        match err {
            DataGenError::SolverBlowup { .. } | DataGenError::ZeroNormTruth => {
                CliError::Numerical(err.to_string())
            }
            DataGenError::Field(field) => field.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// Parse a `lo:hi:count` prediction grid specification.
pub fn parse_grid_spec(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::parse(format!(
            "grid spec `{spec}` must have the form lo:hi:count"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::parse(format!("invalid grid lower bound `{}`", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::parse(format!("invalid grid upper bound `{}`", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::parse(format!("invalid grid count `{}`", parts[2])))?;
    if count == 0 {
        return Err(CliError::validation("grid count must be at least 1"));
    }
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(CliError::validation(format!(
            "invalid grid bounds {lo}..{hi}"
        )));
    }
    Ok(crate::datagen::linspace(lo, hi, count))
}

/// Parse a comma-separated list of derivative orders.
pub fn parse_orders(spec: &str) -> Result<Vec<usize>, CliError> {
    spec.split(',')
        .map(|token| {
            token
                .trim()
                .parse::<usize>()
                .map_err(|_| CliError::parse(format!("invalid derivative order `{token}`")))
        })
        .collect()
}

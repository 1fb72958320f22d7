//! Configuration-driven front end for `geovc`: validate a system, evaluate
//! its control law, or simulate it and write CSV output.

pub mod commands;
pub mod config;

pub use commands::{control, simulate, simulate_sweep, validate, ControlArgs, SimulateOutcome};
pub use config::{RunConfig, Sweep};

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, unparsable or inconsistent configuration, or unwritable output.
    #[error("config error: {0}")]
    Config(String),
    /// The described system or run fails a structural or monitor check.
    #[error("validation failure: {0}")]
    Validation(String),
    /// The integrator halted before the horizon.
    #[error("integration failure: {0}")]
    Integration(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Integration(_) => 4,
        }
    }
}

/// Errors from building a system: shape problems are configuration errors,
/// everything else means the described system is invalid.
pub(crate) fn build_error(e: geovc::Error) -> CliError {
    match e {
        geovc::Error::DimensionMismatch { .. } => CliError::Config(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

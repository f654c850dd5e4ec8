use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Pipeline failure, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 2: bad flags or configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Exit 3: reading or writing files failed.
    #[error("i/o error: {0}")]
    Io(String),
    /// Exit 4: the data cannot be processed (no valid pixels, degenerate mask).
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<CliError> for ExitCode {
    fn from(e: CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}

impl From<swathfill::Error> for CliError {
    fn from(e: swathfill::Error) -> Self {
        use swathfill::Error as E;
        let msg = e.to_string();
        match e {
            E::NotFound(_) | E::Io { .. } | E::CorruptFile { .. } | E::UnsupportedFormat { .. } => {
                CliError::Io(msg)
            }
            E::NoValidSource | E::DegenerateMask(_) => CliError::Degenerate(msg),
            E::DimensionMismatch { .. }
            | E::InvalidRaster(_)
            | E::GapTooLarge(_)
            | E::InvalidPolygon(_)
            | E::InvalidSpec(_) => CliError::Config(msg),
        }
    }
}

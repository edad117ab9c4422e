use std::fmt;
use std::path::PathBuf;

use crate::io::IoError;

/// Pipeline step named in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Load,
    Decompose,
    Guide,
    Finetune,
    Adjust,
    Metrics,
    Save,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Load => "load",
            Phase::Decompose => "decompose",
            Phase::Guide => "guide",
            Phase::Finetune => "finetune",
            Phase::Adjust => "adjust",
            Phase::Metrics => "metrics",
            Phase::Save => "save",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{phase}: {cause}")]
    Io { phase: Phase, cause: IoError },
    #[error("{phase}: {cause}")]
    Core {
        phase: Phase,
        cause: retinex_core::Error,
    },
    #[error("config {path}: {detail}")]
    Config { path: PathBuf, detail: String },
    #[error("invalid config: {0}")]
    InvalidConfig(retinex_core::Error),
    #[error("manifest {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error("manifest has no entries; nothing to benchmark")]
    EmptyManifest,
    #[error("{path}: {detail}")]
    Output { path: PathBuf, detail: String },
}

impl CliError {
    pub fn phase(&self) -> Option<Phase> {
        match self {
            CliError::Io { phase, .. } | CliError::Core { phase, .. } => Some(*phase),
            _ => None,
        }
    }
}

/// Attaches a phase to a fallible core or IO result.
pub(crate) trait InPhase<T> {
    fn in_phase(self, phase: Phase) -> Result<T, CliError>;
}

impl<T> InPhase<T> for Result<T, retinex_core::Error> {
    fn in_phase(self, phase: Phase) -> Result<T, CliError> {
        self.map_err(|cause| CliError::Core { phase, cause })
    }
}

impl<T> InPhase<T> for Result<T, IoError> {
    fn in_phase(self, phase: Phase) -> Result<T, CliError> {
        self.map_err(|cause| CliError::Io { phase, cause })
    }
}

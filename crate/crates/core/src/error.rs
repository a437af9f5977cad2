use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Parameters outside what exhaustive enumeration can handle.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("complexity exceeds L_max = {l_max} for {what}")]
    Overflow { what: String, l_max: u32 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An exactly-checked counting invariant failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("cache version mismatch in {path}: expected digest {expected:016x}, found {found:016x}")]
    CacheVersion { path: PathBuf, expected: u64, found: u64 },

    #[error("corrupt cache file {path}: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },

    #[error("advice decoding failed: {0}")]
    Decode(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LabError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Invariant(_) | LabError::Decode(_) => 1,
            LabError::Infeasible(_)
            | LabError::Overflow { .. }
            | LabError::Precondition(_)
            | LabError::InvalidArgument(_)
            | LabError::Config(_) => 2,
            LabError::CacheVersion { .. } | LabError::CacheCorrupt { .. } | LabError::Io(_) => 3,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

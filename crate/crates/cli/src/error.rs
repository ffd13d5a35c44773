use std::path::PathBuf;

use thiserror::Error;

/// Exit code for invalid configuration.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code for unreadable or inconsistent data.
pub const EXIT_DATA: i32 = 2;
/// Exit code when a self-check suite fails.
pub const EXIT_SELFCHECK: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unknown class name {name:?}")]
    UnknownClassName {
        path: PathBuf,
        line: usize,
        name: String,
    },
    #[error("{path}:{line}: case id {case_id:?} is not listed in the cases file")]
    DanglingCaseId {
        path: PathBuf,
        line: usize,
        case_id: String,
    },
    #[error("{path}:{line}: {source}")]
    InvalidRecord {
        path: PathBuf,
        line: usize,
        source: plausible_core::Error,
    },
    #[error("case {case_id}: {message}")]
    Case { case_id: String, message: String },
    #[error("{} case(s) failed; see {}", .failed, .manifest.display())]
    PartialFailure { failed: usize, manifest: PathBuf },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("self-check failed: {0}")]
    SelfCheck(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::SelfCheck(_) => EXIT_SELFCHECK,
            _ => EXIT_DATA,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

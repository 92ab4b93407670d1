use std::path::Path;

use serde::Serialize;

/// Failure classes with their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags or missing required settings. Exit 1.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or invalid input data. Exit 2.
    #[error("{0}")]
    Input(String),
    /// An external service (LLM or embedding endpoint) failed. Exit 3.
    #[error("{0}")]
    External(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::External(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::External(_) => "external_service",
        }
    }

    pub fn input(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{context}: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct ErrorRecord<'a> {
    command: &'a str,
    kind: &'a str,
    exit_code: i32,
    message: String,
    at: String,
}

/// Emits the error as one JSON line on stderr and, when the run directory
/// exists, as `error.json` inside it.
pub fn log_error(command: &str, err: &CliError, out_dir: Option<&Path>) {
    let record = ErrorRecord {
        command,
        kind: err.kind(),
        exit_code: err.exit_code(),
        message: err.to_string(),
        at: chrono::Utc::now().to_rfc3339(),
    };
    let line = serde_json::to_string(&record).unwrap_or_else(|_| err.to_string());
    eprintln!("{line}");
    if let Some(dir) = out_dir.filter(|d| d.is_dir()) {
        let _ = crate::run::write_atomic(&dir.join("error.json"), format!("{line}\n").as_bytes());
    }
}

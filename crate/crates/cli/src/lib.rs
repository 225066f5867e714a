//! Experiment runner for `wallperc`: configuration, simulation artifacts,
//! auxiliary checks and the verification suites behind the `wallperc`
//! binary.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;
pub mod stats;

use std::path::Path;

use serde_json::{json, Value};

/// Environment variable read for the worker-thread count.
pub const THREADS_ENV: &str = "WALLPERC_THREADS";

/// Version stamped into every summary.json.
pub const ARTIFACT_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] wallperc::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("bad input data: {0}")]
    Data(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(wallperc::Error::BudgetExceeded { .. }) => "budget",
            CliError::Core(_) => "core",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Data(_) => "data",
        }
    }

    /// Machine-readable error record.
    pub fn record(&self) -> Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string()}})
    }
}

/// Sizes the global rayon pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    if n == 0 {
        return Err(CliError::config(format!("{THREADS_ENV} must be positive")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(e.to_string()))
}

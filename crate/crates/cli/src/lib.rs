//! Command-line front end: dataset generation, training, calibration,
//! batch certification, metrics, and oracle verification.

pub mod commands;
pub mod manifest;
pub mod metrics;
pub mod records;
pub mod runconfig;

use std::fmt;

/// CLI failure classes, mapped onto exit codes by `main`.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or option values (exit 1).
    Usage(String),
    /// Unreadable or malformed inputs (exit 2).
    Input(String),
    /// An oracle verification suite reported failures (exit 3).
    Verification(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Verification(msg) => write!(f, "verification failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<editcert_core::Error> for CliError {
    fn from(e: editcert_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Stable per-row master seed: one run seed fans out to independent
/// per-file seeds so thread scheduling cannot affect any verdict.
pub fn row_seed(run_seed: u64, row: u64) -> u64 {
    let mut z = run_seed ^ row.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

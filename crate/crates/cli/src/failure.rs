//! Process-level failure classification.
//!
//! Exit code 2 means the invocation was wrong (bad arguments, unreadable
//! files, malformed inputs) and is shared with clap's own usage errors.
//! Exit code 3 means the inputs parsed but the computation hit a numeric
//! soundness violation: a proposal with no support, a transform producing
//! non-finite weights, or an estimate drawn where the density is zero.

use std::fmt;

use gridtally::ErrorKind;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or unusable input files.
    Input(String),
    /// Numeric soundness violation detected mid-computation.
    Numeric(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Numeric(msg) => f.write_str(msg),
        }
    }
}

impl From<gridtally::Error> for CliError {
    fn from(err: gridtally::Error) -> Self {
        match err.kind() {
            ErrorKind::Input => CliError::Input(err.to_string()),
            ErrorKind::Numeric => CliError::Numeric(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

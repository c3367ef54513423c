use std::fmt;

use lobq::Error;
use serde_json::json;

/// Failure classes with their process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Runtime,
    Usage,
    Comparison,
}

impl Kind {
    pub fn code(self) -> i32 {
        match self {
            Kind::Runtime => 1,
            Kind::Usage => 2,
            Kind::Comparison => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Runtime => "runtime",
            Kind::Usage => "usage",
            Kind::Comparison => "comparison",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Usage,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Runtime,
            message: message.into(),
        }
    }

    /// One-line machine-readable form written to stderr.
    pub fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind.name(), "code": self.kind.code(), "message": self.message}}).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        // bad inputs are usage errors; everything else failed while running
        let kind = match e {
            Error::Domain(_) | Error::InvalidParams(_) | Error::InvalidDistribution(_) | Error::Config(_) => Kind::Usage,
            _ => Kind::Runtime,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

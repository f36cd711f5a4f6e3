use std::fmt;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A single structural problem found while validating a pulse program.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub index: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "element {}: {}", self.index, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("rotation axis is not normalized (|n| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("matrix is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown nuclear spin `{0}`")]
    UnknownSpin(String),

    #[error("invalid pulse program: {}", join(.0))]
    InvalidProgram(Vec<Diagnostic>),

    #[error("element {index} is not allowed on the conditional-unitary path: {reason}")]
    FastPathUnsupported { index: usize, reason: String },

    #[error("branch rotation angles disagree (up {up}, down {down})")]
    AngleMismatch { up: f64, down: f64 },

    #[error("spectrum is not identifiable: {0}")]
    NonIdentifiable(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

fn join(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

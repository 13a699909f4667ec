use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("ordering violated: {0}")]
    Ordering(String),

    #[error("input must be strictly positive, got {0}")]
    NonPositiveInput(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{name} out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("brute-force oracle supports at most 4 variables, got {0}")]
    OracleDimension(usize),

    #[error("no feasible grid point")]
    EmptyFeasibleGrid,

    #[error("fit is infeasible; constraint {index} ({description}) cannot be satisfied")]
    Infeasible { index: usize, description: String },

    #[error("fit is unbounded")]
    Unbounded,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("series too short: need at least {needed} points, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("split at {boundary} leaves the {side} side empty")]
    EmptySplit { boundary: String, side: &'static str },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 2 for configuration, 3 for data, 4 for an
    /// infeasible fit and 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_) | Error::OutOfRange { .. } => 2,
            Error::Parse { .. }
            | Error::InsufficientData { .. }
            | Error::EmptySplit { .. }
            | Error::NonPositiveInput(_)
            | Error::NonFinite(_)
            | Error::Ordering(_)
            | Error::DimensionMismatch { .. }
            | Error::Io { .. }
            | Error::Json(_)
            | Error::Csv(_) => 3,
            Error::Infeasible { .. } => 4,
            _ => 1,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionCap { dim: usize, max: usize },

    #[error("Kraus count {count} exceeds the configured maximum {max}")]
    KrausCap { count: usize, max: usize },

    #[error("blocklength {n} exceeds the configured maximum {max}")]
    BlocklengthCap { n: usize, max: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace {0} differs from 1")]
    Trace(f64),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("channel is not trace preserving (completeness defect {0:e})")]
    NotTracePreserving(f64),

    #[error("invalid connection graph: {0}")]
    Graph(String),

    #[error("connection legs cannot be identified: {0}")]
    Identification(String),

    #[error("Kraus operators are rectangular ({rows}x{cols}); only the definition route is available")]
    Rectangular { rows: usize, cols: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty subspace")]
    EmptySubspace,

    #[error("subspace extraction failed: {0}")]
    ExtractionFailed(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
}

impl Error {
    /// True for errors raised because a desk-scale resource cap was hit.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            Error::DimensionCap { .. } | Error::KrausCap { .. } | Error::BlocklengthCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

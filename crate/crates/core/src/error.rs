use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    #[error("invalid scalar configuration: {0}")]
    InvalidScalars(String),
    #[error("inhomogeneous element where a homogeneous one is required")]
    Inhomogeneous,
    #[error("invalid generator index: {0}")]
    InvalidGenerator(String),
    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("weight out of range: {0}")]
    WeightOutOfRange(String),
    #[error("unexpected edge type: {0}")]
    EdgeAnomaly(String),
    #[error("sign system has no solution")]
    SignSystemUnsolvable,
    #[error("square of the differential is nonzero in homological degree {0}")]
    DSquaredNonzero(i32),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("integer overflow during {0}")]
    Overflow(&'static str),
}

impl Error {
    /// Errors that signal a broken mathematical invariant rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::SignSystemUnsolvable
                | Error::DSquaredNonzero(_)
                | Error::Invariant(_)
                | Error::EdgeAnomaly(_)
                | Error::Overflow(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the locert library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index error: {0}")]
    Index(String),

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    Capacity { dim: usize, max: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cannot compose states: {0}")]
    Composition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("region error: {0}")]
    Region(String),

    #[error("invalid shield plan: {0}")]
    Plan(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("measurement scheme error: {0}")]
    Scheme(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed input, failed validation, domain violations.
    Input,
    /// Missing marginals or marginals that disagree.
    Consistency,
    /// Numerical procedure failed to converge or produced a degenerate result.
    Numerical,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Coverage(_) | Error::Consistency(_) => ErrorKind::Consistency,
            Error::Degenerate(_) => ErrorKind::Numerical,
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Input,
        }
    }

    /// Prefixes the message of string-carrying variants, keeping the variant.
    pub fn context(self, prefix: impl std::fmt::Display) -> Self {
        use Error::*;
        let p = |m: String| format!("{prefix}: {m}");
        match self {
            Index(m) => Index(p(m)),
            Shape(m) => Shape(p(m)),
            Composition(m) => Composition(p(m)),
            Domain(m) => Domain(p(m)),
            Validation(m) => Validation(p(m)),
            Region(m) => Region(p(m)),
            Plan(m) => Plan(p(m)),
            Coverage(m) => Coverage(p(m)),
            Consistency(m) => Consistency(p(m)),
            Degenerate(m) => Degenerate(p(m)),
            Geometry(m) => Geometry(p(m)),
            Scheme(m) => Scheme(p(m)),
            Parse(m) => Parse(p(m)),
            Json(e) => Parse(p(e.to_string())),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

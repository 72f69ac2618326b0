//! Error types used across the crate.

use thiserror::Error;

/// Errors from the sparse linear algebra layer.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Errors from mesh construction, validation and file input.
#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("invalid mesh: {0}")]
    Invalid(String),

    #[error("boundary edge ({a}, {b}) has no boundary tag")]
    UntaggedBoundary { a: usize, b: usize },
}

/// Errors from configuration files and CLI-level input.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: unknown key `{key}`")]
    UnknownKey {
        path: String,
        line: usize,
        key: String,
    },

    #[error("missing required key `{0}`")]
    MissingKey(String),
}

/// Errors raised while advancing the scheme in time.
#[derive(Debug, Error)]
pub enum StepError {
    #[error("{system} solve failed at step {step}: {detail}")]
    SolveFailed {
        system: &'static str,
        step: usize,
        detail: String,
    },

    #[error("auxiliary variable collapsed at step {step}: |psi| = {psi:e} < 1e-6")]
    PsiCollapse { step: usize, psi: f64 },

    #[error("auxiliary update denominator vanished at step {step}: |den| = {den:e}")]
    DegenerateUpdate { step: usize, den: f64 },

    #[error("mesh has no boundary facets tagged `{tag}`")]
    MissingBoundary { tag: &'static str },
}

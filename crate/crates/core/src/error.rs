use std::path::PathBuf;

use crate::spectral::EigenPair;

/// Errors produced by the solvers and the data loaders.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not symmetric: entry ({row},{col}) = {upper} but ({col},{row}) = {lower}")]
    NotSymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("matrix is not positive semidefinite: pivot {pivot:e} at index {index}")]
    NotPositiveSemidefinite { index: usize, pivot: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: EigenPair,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    #[error("assignment has no value for variable `{0}`")]
    MissingVariable(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

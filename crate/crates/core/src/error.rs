use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has {rows}x{cols} shape: {reason}")]
    Shape {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("SVD of {rows}x{cols} matrix did not converge after {sweeps} Jacobi sweeps")]
    NoConvergence {
        rows: usize,
        cols: usize,
        sweeps: usize,
    },

    #[error("null space of {rows}x{cols} matrix is empty (rank {rank})")]
    EmptyNullSpace {
        rows: usize,
        cols: usize,
        rank: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("cell {cell}: {source}")]
    Cell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

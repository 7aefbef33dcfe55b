use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unsupported bound type `{kind}`")]
    UnsupportedBound { line: usize, kind: String },

    #[error("inconsistent dependent row `{row}`")]
    Infeasible { row: String },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("Newton system numerically singular at iteration {iteration}")]
    IllConditioned { iteration: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Contract(String),

    #[error("problem is {0}")]
    Status(String),

    #[error("sampling found no usable point: {0}")]
    Sampling(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

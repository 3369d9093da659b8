use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch at line {line}: expected {expected} columns, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid weight distribution: {0}")]
    Validation(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("rank {rank} exceeds the enumeration limit {limit}; supply a weight file instead")]
    RankTooLarge { rank: usize, limit: usize },

    #[error("input too large: {what} = {value} exceeds {limit}")]
    InputTooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("code has no nonzero codewords")]
    EmptyCode,

    #[error("full rank required: generator has {rows} rows but rank {rank}")]
    RankDeficient { rows: usize, rank: usize },

    #[error("generator is full rank (rank {rank}); the rank-deficiency claim is vacuous")]
    NotRankDeficient { rank: usize },

    #[error("security target unreachable: {0}")]
    TargetUnreachable(String),

    #[error("partial weight distribution cannot be used here: {0}")]
    PartialDistribution(&'static str),

    #[error("corpus {0} contains no weight files")]
    EmptyCorpus(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal check failed: {0}")]
    InternalCheck(String),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    /// True for errors that stem from the mathematics of the input rather
    /// than from malformed or oversized input.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::NotRankDeficient { .. }
                | Error::TargetUnreachable(_)
                | Error::EmptyCode
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

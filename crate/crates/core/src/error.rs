use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::tokenizer::TokenId;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("duplicate token {token:?} at line {line}")]
    DuplicateToken { line: usize, token: String },
    #[error("missing special token {0}")]
    MissingSpecial(String),
    #[error("unknown token id {0}")]
    UnknownId(TokenId),
    #[error("cannot read vocabulary line {line}: {source}")]
    Read {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cannot mix {0} and {1} datasets in one table")]
    TaskMismatch(String, String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("no span length fits in {maskable_len} maskable positions")]
    NoPlacement { maskable_len: usize },
    #[error("invalid masking config: {0}")]
    InvalidConfig(String),
    #[error("plan does not fit the sequence: {0}")]
    InvalidPlan(String),
    #[error("maskable tokens are not contiguous")]
    NonContiguous,
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("question of {len} tokens leaves no room in a {max_len}-token window")]
    QuestionOverflow { len: usize, max_len: usize },
    #[error("option of {len} tokens leaves no room in a {max_len}-token window")]
    OptionOverflow { len: usize, max_len: usize },
    #[error("passage contains no blank markers")]
    NoBlanks,
    #[error("invalid windowing policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("gold answer for {0} is empty")]
    EmptyGold(String),
    #[error("missing prediction for {0}")]
    MissingPrediction(String),
    #[error("prediction for {0} does not have 9 letters")]
    ArityError(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("selected sentences overlap in {0}")]
    OverlappingSentences(String),
    #[error("invalid bucket config: {0}")]
    InvalidConfig(String),
}

/// Crate-wide error, with the exit-code mapping used by the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("usage: {0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn parse(path: impl AsRef<Path>, line: usize, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            path: path.as_ref().to_path_buf(),
            line,
            message: message.to_string(),
        }
    }

    /// 0 ok, 2 usage, 3 validation, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io { .. } => 4,
            Error::Tokenizer(TokenizerError::Read { .. }) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Tokenizer(_) => "tokenizer",
            Error::Stats(_) => "stats",
            Error::Mask(_) => "masking",
            Error::Assembly(_) => "assembly",
            Error::Metrics(_) => "metrics",
            Error::Dataset(_) => "dataset",
            Error::Usage(_) => "usage",
            Error::Validation(_) => "validation",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

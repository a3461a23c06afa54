use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Runtime,
}

#[derive(Debug, Error)]
pub enum FlrError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("no usable rows after cleaning ({dropped} dropped)")]
    NoRows { dropped: usize },

    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("trimmed mean with alpha {alpha} would discard all {count} values")]
    OverTrimmed { alpha: f64, count: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("seed {seed}, stage `{stage}`: {source}")]
    Stage {
        seed: u64,
        stage: &'static str,
        #[source]
        source: Box<FlrError>,
    },

    #[error("cannot serialize output: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl FlrError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            FlrError::InvalidConfig(_) | FlrError::OverTrimmed { .. } => ErrorKind::Config,
            FlrError::Io { .. }
            | FlrError::Csv { .. }
            | FlrError::MissingColumn(_)
            | FlrError::NoRows { .. }
            | FlrError::TooFewClasses(_)
            | FlrError::InvalidData(_)
            | FlrError::InsufficientData(_) => ErrorKind::Data,
            FlrError::Stage { source, .. } => source.kind(),
            FlrError::DimensionMismatch { .. }
            | FlrError::Empty(_)
            | FlrError::DegenerateFit(_)
            | FlrError::Serialize(_) => ErrorKind::Runtime,
        }
    }

    pub(crate) fn at_stage(self, seed: u64, stage: &'static str) -> FlrError {
        FlrError::Stage { seed, stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, FlrError>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(FlrError::DimensionMismatch { expected, actual })
    }
}

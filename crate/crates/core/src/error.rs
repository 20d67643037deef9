use std::path::PathBuf;

use thiserror::Error;

/// Broad failure class. The CLI maps each class to a distinct exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("duplicate cell ({region}, {year}, {indicator})")]
    DuplicateCell {
        region: String,
        year: i32,
        indicator: String,
    },

    #[error("unknown indicator `{0}` (not present in indicator spec)")]
    UnknownIndicator(String),

    #[error("unknown region `{0}`")]
    UnknownRegion(String),

    #[error("years are not consecutive: {0} is followed by {1}")]
    YearGap(i32, i32),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("weights sum to {sum}, expected 1 within {tolerance}")]
    WeightSum { sum: f64, tolerance: f64 },

    #[error("series ({region}, {indicator}) has {observed} observed values, need at least 2")]
    InsufficientObservations {
        region: String,
        indicator: String,
        observed: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero range for indicator `{indicator}` ({scope})")]
    ZeroRange { indicator: String, scope: String },

    #[error("zero dispersion: {0}")]
    ZeroDispersion(String),

    #[error("need at least {needed} distinct values, found {found}")]
    TooFewDistinct { needed: usize, found: usize },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config { .. } => ErrorKind::Config,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::DuplicateCell { .. }
            | Error::UnknownIndicator(_)
            | Error::UnknownRegion(_)
            | Error::YearGap(..)
            | Error::InvalidData(_)
            | Error::WeightSum { .. }
            | Error::InsufficientObservations { .. }
            | Error::DimensionMismatch(_) => ErrorKind::Data,
            Error::ZeroRange { .. }
            | Error::ZeroDispersion(_)
            | Error::TooFewDistinct { .. }
            | Error::Degenerate(_)
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

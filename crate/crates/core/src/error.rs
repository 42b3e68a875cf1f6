use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus is empty or no term survives the document-frequency threshold")]
    EmptyCorpus,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("post {0} has no polarity label")]
    UnlabeledPost(String),
    #[error("training set holds only one polarity class")]
    DegenerateLabels,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("trading calendar is empty")]
    EmptyCalendar,
    #[error("non-positive price {0}")]
    NonPositivePrice(f64),
    #[error("degenerate normalization range: min = max = {0}")]
    DegenerateRange(f64),
    #[error("no common dates between volatility and indicator series")]
    EmptyIntersection,
    #[error("label vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label vector is empty")]
    EmptyVector,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("no result for stock {stock}, method {method}")]
    MissingCell { stock: String, method: String },
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("no valid posts in {0}")]
    NoValidPosts(PathBuf),
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// True for errors caused by a bad configuration rather than bad data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidSpec(_))
    }
}

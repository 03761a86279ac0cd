use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} is not positive definite")]
    NotPositiveDefinite(String),

    #[error("component {component} is degenerate: scale matrix update is not positive definite")]
    DegenerateComponent { component: usize },

    #[error("cannot fit {k} components to {n} observations")]
    TooFewObservations { n: usize, k: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short module tag used by the CLI's single-line error output.
    pub fn module(&self) -> &'static str {
        match self {
            Error::DegenerateComponent { .. } | Error::TooFewObservations { .. } => "gmm",
            Error::NotPositiveDefinite(_) | Error::DimensionMismatch { .. } => "linalg",
            Error::InvalidParameter(_) | Error::NonFinite(_) => "params",
            Error::MissingColumn(_)
            | Error::Cell { .. }
            | Error::ZeroVariance(_)
            | Error::Empty(_)
            | Error::Csv(_) => "data_io",
            Error::Malformed(_) | Error::Json(_) => "format",
            Error::Io { .. } => "io",
        }
    }
}

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no non-DC energy")]
    NoSignal,

    #[error("phase undefined at chirp {0}")]
    PhaseUndefined(usize),

    #[error("no respiratory energy")]
    NoRespiratoryEnergy,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{0}")]
    Dataset(String),

    #[error("SMOTE requires two classes")]
    SingleClass,

    #[error("solver did not converge after {passes} passes")]
    NotConverged { passes: usize },

    #[error("{metric} is undefined: {reason}")]
    UndefinedMetric { metric: &'static str, reason: &'static str },

    #[error("{0}")]
    Parse(String),

    #[error("unsupported model version {0:?}")]
    ModelVersion(String),

    #[error("{path}: {source}")]
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
}

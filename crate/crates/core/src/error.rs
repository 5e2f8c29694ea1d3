use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class surfaced on the command line and across the C ABI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
    Capacity,
}

impl ErrorClass {
    pub fn code(self) -> &'static str {
        match self {
            ErrorClass::Config => "E_CONFIG",
            ErrorClass::Data => "E_DATA",
            ErrorClass::Numeric => "E_NUMERIC",
            ErrorClass::Capacity => "E_CAPACITY",
        }
    }

    /// Process exit status: 2 usage/config, 3 data, 4 numeric.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config | ErrorClass::Capacity => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column '{column}': {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("predictor '{0}' has zero variance")]
    DegeneratePredictor(String),

    #[error("fold error: {0}")]
    Fold(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("subset {subset} is collinear (reciprocal condition {rcond:.3e})")]
    Collinear { subset: String, rcond: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("no fittable model inside purchased set {0}")]
    EmptyEnsemble(String),

    #[error("missing fit for subset {0} with non-negligible weight")]
    MissingFit(String),

    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("invalid argument: {0}")]
    Argument(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::Fold(_) | Error::Argument(_) => ErrorClass::Config,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Data(_)
            | Error::DegeneratePredictor(_)
            | Error::Design(_)
            | Error::InsufficientData(_)
            | Error::Shape { .. } => ErrorClass::Data,
            Error::Collinear { .. } | Error::EmptyEnsemble(_) | Error::MissingFit(_) | Error::Conditioning(_) => {
                ErrorClass::Numeric
            }
            Error::Capacity(_) => ErrorClass::Capacity,
        }
    }

    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

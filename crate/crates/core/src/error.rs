use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("join error: orphan ids {0:?}")]
    Join(Vec<String>),

    #[error("data error: {0}")]
    Data(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("compatibility error in modality '{modality}': {reason}")]
    Compatibility { modality: String, reason: String },

    #[error("undefined result: {0}")]
    Undefined(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch} (parameter norm {param_norm:e})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        param_norm: f64,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Error classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numeric => 4,
            ErrorClass::Io => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Config => "config",
            ErrorClass::Data => "data",
            ErrorClass::Numeric => "numeric",
            ErrorClass::Io => "io",
        }
    }
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Schema(_) | Error::Config(_) | Error::Compatibility { .. } => ErrorClass::Config,
            Error::Join(_) | Error::Data(_) | Error::Split(_) | Error::Csv(_) => ErrorClass::Data,
            Error::Domain(_) | Error::Fit(_) | Error::Undefined(_) | Error::NonFiniteLoss { .. } => {
                ErrorClass::Numeric
            }
            Error::Io { .. } | Error::Json(_) => ErrorClass::Io,
        }
    }
}

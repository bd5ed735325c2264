use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A row of the matrix handed to the row projection has zero (or
    /// non-finite) norm, so it cannot be mapped onto the unit sphere.
    #[error("degenerate row {row}: norm is {norm}")]
    DegenerateRow { row: usize, norm: f64 },

    #[error("channel matrix carries no signal (all gains are zero)")]
    NoSignal,

    #[error("user receives no signal through the precoder (all effective gains are zero)")]
    UncoverableUser,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation failed: `{field}` {reason}")]
    ConfigValidation { field: String, reason: String },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable category, used by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) | Error::DimensionMismatch(_) => "invalid-argument",
            Error::DegenerateRow { .. } | Error::NoSignal | Error::UncoverableUser => "numerical",
            Error::ConfigParse { .. } => "config-parse",
            Error::ConfigValidation { .. } => "config-validation",
            Error::Csv(_) | Error::Io(_) => "io",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

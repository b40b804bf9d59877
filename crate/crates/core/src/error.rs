use thiserror::Error;

/// Errors produced anywhere in the codec pipeline.
#[derive(Debug, Error)]
pub enum SlfError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    #[error("numerical failure at point {point:?}: {reason}")]
    NumericalFailure { point: Option<usize>, reason: String },

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("unsupported stream: {0}")]
    UnsupportedStream(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl SlfError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SlfError::InvalidArgument(msg.into())
    }

    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        SlfError::CorruptStream(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SlfError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn numerical(point: Option<usize>, reason: impl Into<String>) -> Self {
        SlfError::NumericalFailure {
            point,
            reason: reason.into(),
        }
    }

    /// Prefixes the message with `ctx`, keeping the category.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            SlfError::InvalidArgument(m) => SlfError::InvalidArgument(format!("{ctx}: {m}")),
            SlfError::OutOfBounds(m) => SlfError::OutOfBounds(format!("{ctx}: {m}")),
            SlfError::NumericalFailure { point, reason } => SlfError::NumericalFailure {
                point,
                reason: format!("{ctx}: {reason}"),
            },
            SlfError::CorruptStream(m) => SlfError::CorruptStream(format!("{ctx}: {m}")),
            SlfError::UnsupportedStream(m) => SlfError::UnsupportedStream(format!("{ctx}: {m}")),
            SlfError::Config { field, reason } => SlfError::Config {
                field,
                reason: format!("{ctx}: {reason}"),
            },
            SlfError::Format(m) => SlfError::Format(format!("{ctx}: {m}")),
            SlfError::Io(e) => SlfError::Io(std::io::Error::new(e.kind(), format!("{ctx}: {e}"))),
        }
    }

    /// Short machine-parsable category name, used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            SlfError::InvalidArgument(_) => "invalid-argument",
            SlfError::OutOfBounds(_) => "out-of-bounds",
            SlfError::NumericalFailure { .. } => "numerical-failure",
            SlfError::CorruptStream(_) => "corrupt-stream",
            SlfError::UnsupportedStream(_) => "unsupported-stream",
            SlfError::Config { .. } => "config-error",
            SlfError::Format(_) => "format-error",
            SlfError::Io(_) => "io-error",
        }
    }
}

pub type Result<T, E = SlfError> = std::result::Result<T, E>;

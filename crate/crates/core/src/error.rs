use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("normalization undefined: no nonzero coefficient for strategy {0}")]
    NormalizationUndefined(&'static str),

    #[error("size {requested} exceeds the configured cap of {cap}")]
    SizeCap { requested: usize, cap: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("injection layer {layer} is outside 0..={layers}")]
    InjectionOutOfRange { layer: usize, layers: usize },

    #[error("overlap undefined: ideal and random success probabilities coincide")]
    UndefinedOverlap,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("metric unavailable: {0}")]
    MetricUnavailable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by a bad configuration or argument rather than
    /// by the environment.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Contract(_)
                | Error::Parameter(_)
                | Error::NormalizationUndefined(_)
                | Error::Unsupported(_)
                | Error::InjectionOutOfRange { .. }
                | Error::Json(_)
        )
    }

    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::SizeCap { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

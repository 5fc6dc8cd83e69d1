use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{quantity} must be positive, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },

    #[error("{quantity} must be finite, got {value}")]
    NonFinite { quantity: &'static str, value: f64 },

    #[error("{quantity} out of range: {value} (expected {expected})")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("missing parameter: {0}")]
    MissingParameter(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("request count is zero")]
    ZeroRequests,

    #[error("threshold unreachable: predicted {predicted_dbm:.2} dBm at {distance_m} m is already below the {target_dbm:.2} dBm floor")]
    ThresholdUnreachable {
        distance_m: f64,
        predicted_dbm: f64,
        target_dbm: f64,
    },

    #[error("no reliable point in series")]
    NoReliablePoint,

    #[error("degenerate fit input: {0}")]
    DegenerateFit(&'static str),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(
        source_name: impl Into<String>,
        line: u64,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn ensure_finite(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { quantity, value })
    }
}

pub(crate) fn ensure_positive(quantity: &'static str, value: f64) -> Result<f64> {
    ensure_finite(quantity, value)?;
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositive { quantity, value })
    }
}

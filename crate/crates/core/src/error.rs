use thiserror::Error;

/// Everything the library can fail with. The CLI maps variants onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure in {what}: achieved error estimate {estimate:e}")]
    NumericFailure { what: String, estimate: f64 },
    #[error("singular denominator in {what}: x*phi'(psi(x)) = {value}")]
    Singularity { what: String, value: f64 },
    #[error("unsupported regime: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("insufficient statistical power: {0}")]
    StatisticalPower(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

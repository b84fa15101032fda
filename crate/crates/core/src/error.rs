use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// Usage errors (bad dimensions, unknown names, bad parameters) are kept
/// separate from numerical failures so callers can map them to distinct
/// exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown name `{0}`, valid names are: {1}")]
    UnknownName(String, String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("state norm exceeded overflow guard ({0:.3e}) during integration")]
    BlowUp(f64),

    #[error("embedding order inversion at t = {0}")]
    OrderInversion(f64),

    #[error("no interior point found for boundary sampling")]
    NoInteriorPoint,

    #[error("time regression: t = {now} after t = {prev}")]
    TimeRegression { prev: f64, now: f64 },

    #[error("quadratic program dimension {0} exceeds solver cap of 8")]
    QpTooLarge(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks that a slice contains only finite values.
pub fn ensure_finite(values: &[f64], context: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context.to_string()))
    }
}

/// Checks that two lengths agree.
pub fn ensure_len(actual: usize, expected: usize, context: &str) -> Result<()> {
    if actual == expected {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{context}: expected length {expected}, got {actual}"
        )))
    }
}

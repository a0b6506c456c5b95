use alloc::string::String;

/// Errors raised by the simulation and estimation engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("time {t} is not a grid time of a grid with step {dt}")]
    OffGrid { t: f64, dt: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("kernel is not integrable against the requested function: {0}")]
    Integrability(String),
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("estimation error: {0}")]
    Estimation(String),
    #[error("lookup error: {0}")]
    Lookup(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

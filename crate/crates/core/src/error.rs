use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The operation is not available for this model.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A root search could not bracket or converge.
    #[error("solver failure: {0}")]
    Solver(String),

    /// A derived quantity has no defined value (e.g. every estimate is 0 or 1).
    #[error("undefined: {0}")]
    Undefined(String),

    /// Simulation would exceed the configured resource budget.
    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Fails with `InvalidParameter` unless `ok` holds.
pub(crate) fn ensure(ok: bool, name: &'static str, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(name, reason()))
    }
}

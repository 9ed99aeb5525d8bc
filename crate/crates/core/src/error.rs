use thiserror::Error;

/// Library-wide error type. Variants mirror where things go wrong: bad
/// arguments (`Domain`), bad configuration (`Config`), unusable data
/// (`Data`), an unusable fitted model (`Model`), and optimizer failures
/// (`Optim`).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("optimization error: {0}")]
    Optim(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
    pub fn model(msg: impl Into<String>) -> Self {
        Error::Model(msg.into())
    }
    pub fn optim(msg: impl Into<String>) -> Self {
        Error::Optim(msg.into())
    }

    /// True for errors caused by user-supplied data or configuration, as
    /// opposed to internal failures. The CLI maps these to exit code 2.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Config(_) | Error::Data(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DunklError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported dimension {0} (supported: 1, 2, 3)")]
    UnsupportedDimension(usize),
    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),
    #[error("point is not regular: {0}")]
    RegularPoint(String),
    #[error("not a root system: {0}")]
    NotARootSystem(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("singular point: {0}")]
    SingularPoint(String),
    #[error("accuracy not reached: estimate {estimate:e}, error {error:e}, requested {requested:e}")]
    Accuracy { estimate: f64, error: f64, requested: f64 },
}

impl DunklError {
    pub fn domain(msg: impl Into<String>) -> Self {
        DunklError::Domain(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        DunklError::Contract(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, DunklError>;

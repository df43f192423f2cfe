use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("wrong target kind: expected {expected}, got {got}")]
    Kind { expected: &'static str, got: String },

    #[error("ridge directions stayed rank deficient after {retries} retries")]
    DegenerateDirections { retries: usize },

    #[error("certification failed at {location}: {value} > {limit}")]
    Certification {
        location: String,
        value: f64,
        limit: f64,
    },

    #[error("network is outside the hypothesis space: {0}")]
    Membership(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

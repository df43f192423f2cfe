use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("bound violation: {0}")]
    BoundViolation(String),

    #[error(transparent)]
    Core(#[from] distreg_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn config(field: &str, msg: &str) -> Self {
        Self::Config(format!("field `{field}`: {msg}"))
    }

    /// 2 config, 3 bound violation, 4 capacity, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::BoundViolation(_) => 3,
            Self::Core(distreg_core::Error::Capacity(_)) => 4,
            Self::Core(distreg_core::Error::Json(_) | distreg_core::Error::Parse(_)) => 2,
            Self::Core(_) | Self::Io(_) => 1,
        }
    }
}

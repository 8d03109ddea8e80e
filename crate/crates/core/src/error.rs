use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidexError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),
    #[error("unsupported class: {0}")]
    UnsupportedClass(String),
    #[error("numerical blow-up at t = {time}: {context}")]
    NumericalBlowup { time: f64, context: String },
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("malformed field data: {0}")]
    Format(String),
}

impl FluidexError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, FluidexError::NumericalBlowup { .. })
    }
}

pub type Result<T> = std::result::Result<T, FluidexError>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("degenerate evaluation: {0}")]
    DegenerateEvaluation(String),

    /// No component can explain the (transferred) point with its label.
    #[error("degenerate responsibilities: point {index} has zero mass under every component")]
    DegenerateResponsibility { index: usize },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid result: {0}")]
    InvalidResult(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("malformed document: {0}")]
    Document(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateModel(_)
                | Error::DegenerateEvaluation(_)
                | Error::DegenerateResponsibility { .. }
                | Error::SingularSystem(_)
                | Error::NumericalFailure(_)
        )
    }
}

pub(crate) fn invalid_input(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn invalid_config(msg: impl Into<String>) -> Error {
    Error::InvalidConfiguration(msg.into())
}

use thiserror::Error;

pub type Result<T, E = XcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum XcError {
    #[error("non-finite value in feature component {index} ({name})")]
    NonFiniteFeature { index: usize, name: &'static str },

    #[error("{functional}: negative input `{input}` = {value}")]
    NegativeInput {
        functional: &'static str,
        input: &'static str,
        value: f64,
    },

    #[error("length mismatch in {context}: expected {expected}, got {got}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite activation in layer `{layer}`")]
    NonFiniteActivation { layer: String },

    #[error("non-finite result: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("unknown species `{0}`")]
    MissingSpecies(String),

    #[error("element {0} does not occur in any species and cannot be covered by the training split")]
    UncoverableElement(String),

    #[error("training halted: {0}")]
    TrainingHalted(String),

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl XcError {
    pub(crate) fn format(path: impl Into<String>, message: impl Into<String>) -> Self {
        XcError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Broad failure class, used by the command-line driver to pick an exit code.
    pub fn class(&self) -> ErrorClass {
        match self {
            XcError::InvalidConfig(_) => ErrorClass::Usage,
            XcError::NonFinite(_)
            | XcError::NonFiniteActivation { .. }
            | XcError::TrainingHalted(_) => ErrorClass::Numerical,
            _ => ErrorClass::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

use std::io;

use thiserror::Error;

pub type Result<T, E = QtcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QtcError {
    /// A parameter is outside the range the component supports.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<QtcError>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QtcError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        QtcError::Config(msg.into())
    }

    pub(crate) fn shape(context: &'static str, expected: usize, actual: usize) -> Self {
        QtcError::Shape {
            context,
            expected,
            actual,
        }
    }

    /// True for errors caused by bad parameters rather than bad input data.
    pub fn is_config(&self) -> bool {
        match self {
            QtcError::Config(_) | QtcError::Argument(_) | QtcError::InvalidGate(_) => true,
            QtcError::Context { source, .. } => source.is_config(),
            _ => false,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        QtcError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

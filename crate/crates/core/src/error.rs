use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A subgradient outside the `[-1, 1]` coin range was fed to a betting updater.
    #[error("subgradient {0} outside [-1, 1]")]
    SubgradientOutOfRange(f64),

    #[error("non-finite value at step {step}: {what} = {value}")]
    NonFinite {
        step: usize,
        what: &'static str,
        value: f64,
    },

    #[error("stream is faulted after a non-finite value at step {0}")]
    Faulted(usize),

    #[error("model is not fitted")]
    NotFitted,

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("window {window} exceeds trace length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("step {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(self, index: usize) -> Self {
        Error::AtIndex {
            index,
            source: Box::new(self),
        }
    }
}

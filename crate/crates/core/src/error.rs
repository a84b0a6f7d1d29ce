use thiserror::Error;

pub type Result<T> = std::result::Result<T, NarmaxError>;

#[derive(Debug, Error)]
pub enum NarmaxError {
    #[error("invalid dictionary bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid regressor term: {0}")]
    InvalidTerm(String),

    #[error("duplicate regressor term {0}")]
    DuplicateTerm(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("data has {samples} samples but the dictionary needs more than {max_lag}")]
    InsufficientData { samples: usize, max_lag: usize },

    #[error("dictionary references input channel {channel} but the data has {available} input(s)")]
    MissingInput { channel: usize, available: usize },

    #[error("length mismatch in {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {what} at sample {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("lag {lag} exceeds the available history at sample {index}")]
    LagOutOfRange { lag: usize, index: usize },

    #[error("all regressor columns are zero")]
    DegenerateRegressors,

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("simulation diverged at sample {index}")]
    Diverged { index: usize },

    #[error("every path entry diverged on the validation data")]
    AllDiverged,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl NarmaxError {
    /// True for errors that come from numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            NarmaxError::DegenerateRegressors
                | NarmaxError::Diverged { .. }
                | NarmaxError::AllDiverged
        )
    }
}

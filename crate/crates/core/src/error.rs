use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// The selection could not be certified. Carries the best subset found and its
    /// smallest singular value so the failure is never silent.
    #[error("no certificate found: best attempt J={best_subset:?} achieved {best_value:e}, required {required_bound:e}")]
    NoCertificate {
        best_subset: Vec<usize>,
        best_value: f64,
        required_bound: f64,
    },

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

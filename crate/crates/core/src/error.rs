use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LadderError {
    #[error("invalid ladder specification: {0}")]
    InvalidSpec(String),

    #[error("{what} index {index} out of range {lo}..={hi}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid initial state: {0}")]
    InvalidState(String),

    #[error("expectation value has imaginary residue {0:e}")]
    ComplexExpectation(f64),

    #[error("series starts at zero; deconvolution is singular")]
    SingularDeconvolution,

    #[error("series starts at zero; rescaling is undefined")]
    UndefinedScaling,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("kernel covers {available} steps but {requested} were requested")]
    KernelTooShort { available: usize, requested: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, LadderError>;

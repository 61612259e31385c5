use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("negative exponent at byte {offset}")]
    NegativeExponent { offset: usize },

    #[error("{what} = {value} exceeds the configured limit {limit}")]
    LimitExceeded {
        what: &'static str,
        value: u128,
        limit: u128,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} variables/modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("P(n)^2 is not representable as a finite f64 at occupation tuple {tuple:?}")]
    FloatRange { tuple: Vec<u64> },

    #[error(
        "truncation-safety rule violated on mode {mode}: |alpha|^2 = {alpha_sq} > n_max/4 = {bound}"
    )]
    TruncationSafety {
        mode: usize,
        alpha_sq: f64,
        bound: f64,
    },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("norm defect {defect:e} at step {step} exceeds {limit:e}; reduce the step size")]
    NormDefect {
        step: usize,
        defect: f64,
        limit: f64,
    },

    #[error("operators or states live on different Fock spaces")]
    SpaceMismatch,

    #[error(
        "series tail bound {bound:e} exceeds tolerance relative to retained value {retained:e} at i_max = {i_max}; increase i_max"
    )]
    TailBound {
        bound: f64,
        retained: f64,
        i_max: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

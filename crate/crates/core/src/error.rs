use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("model mismatch: operation needs {expected}, ensemble is {found}")]
    ModelMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("basis states {mu} and {nu} are not at unit Hamming distance")]
    NotHammingNeighbors { mu: usize, nu: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("table is not symmetric at ({row}, {col})")]
    AsymmetricTable { row: usize, col: usize },

    #[error("negative variance {value} at ({row}, {col})")]
    NegativeVariance { row: usize, col: usize, value: f64 },

    #[error("eigensolver did not converge (realization {realization:?})")]
    NoConvergence { realization: Option<u64> },

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("window of {requested} states is invalid for a spectrum of {available}")]
    InvalidWindow { requested: usize, available: usize },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("Schmidt spectrum trace deviates from one: {trace}")]
    TraceDeviation { trace: f64 },

    #[error("empty input")]
    EmptyInput,

    #[error("need at least {needed} entries, got {found}")]
    TooFew { needed: usize, found: usize },

    #[error("singular complexity term |g - 2 gamma v| = 0 at ({row}, {col})")]
    SingularComplexityTerm { row: usize, col: usize },

    #[error("Langevin step failed on trajectory {trajectory} at Lambda = {lambda}")]
    StepFailure { trajectory: usize, lambda: f64 },

    #[error("curves have no overlapping support")]
    NoOverlap,

    #[error("degenerate scaling fit: {0}")]
    DegenerateFit(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

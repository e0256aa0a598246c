use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors are split into validation failures (bad inputs, malformed files)
/// and resource caps (requests whose exhaustive cost would be unreasonable).
/// The CLI maps the former to exit code 2 and the latter to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension out of range: {0}")]
    DimensionOutOfRange(String),
    #[error("arity cap exceeded: {0}")]
    ArityCap(String),
    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),
    #[error("search space cap exceeded: {0}; use the greedy lower bound instead")]
    SearchSpaceCap(String),
    #[error("size cap exceeded: {0}")]
    SizeCap(String),
    #[error("sketch width cap exceeded: {0}")]
    WidthCap(String),
    #[error("constraint vectors are linearly dependent")]
    DependentConstraints,
    #[error("margin must be positive: {0}")]
    NonpositiveMargin(String),
    #[error("delta out of range: {0}")]
    DeltaRange(String),
    #[error("arity must be odd: {0}")]
    EvenArity(usize),
    #[error("stream index {index} out of range for n={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("automaton is not path independent: streams {lhs:?} and {rhs:?} have equal frequency but reach distinct states")]
    PathDependent { lhs: Vec<u32>, rhs: Vec<u32> },
    #[error("exact evaluation requires an enumerable scheme distribution")]
    ExactModeUnavailable,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown builtin function spec: {0}")]
    UnknownBuiltin(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that come from a configurable resource cap.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::ArityCap(_)
                | Error::EnumerationCap(_)
                | Error::SearchSpaceCap(_)
                | Error::SizeCap(_)
                | Error::WidthCap(_)
        )
    }
}

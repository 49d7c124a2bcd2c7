use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the toolkit.
///
/// `InvalidInput`-style variants describe malformed data; `Precondition`
/// covers well-formed input that does not satisfy an operation's contract
/// (a non-ultrametric matrix handed to a routine that requires one, for
/// example).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid dendrogram: {0}")]
    InvalidDendrogram(String),

    #[error("too few objects: need at least {needed}, got {got}")]
    TooFewObjects { needed: usize, got: usize },

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate column {column}: column sum is zero")]
    DegenerateColumn { column: usize },

    #[error("incompatible digit strings: {0}")]
    IncompatibleStrings(String),

    #[error("not a dendrogram: {0}")]
    NotADendrogram(String),

    #[error("dilation exhausted: no levels remain")]
    Exhausted,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),
}

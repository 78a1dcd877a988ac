//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, sampling, solving and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Two factors share the same scope and the same basis payload.
    #[error("duplicate factor: factors {first} and {second} have identical scope and payload")]
    DuplicateFactor { first: usize, second: usize },

    /// A scope references a vertex outside `0..p`.
    #[error("vertex {vertex} out of range for p = {p}")]
    VertexOutOfRange { vertex: usize, p: usize },

    /// A scope is empty, unsorted or contains repeats.
    #[error("invalid scope: {0}")]
    InvalidScope(String),

    /// A factor id does not exist in the graph.
    #[error("unknown factor id {0}")]
    UnknownFactor(usize),

    /// Alphabet sizes must all be at least 2 (and fit the symbol encoding).
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    /// Factor payload inconsistent with the declared basis kind.
    #[error("invalid basis payload for factor {factor}: {reason}")]
    InvalidBasisPayload { factor: usize, reason: String },

    /// Model parameter vector length differs from the factor count.
    #[error("theta length {got} does not match factor count {expected}")]
    ThetaLengthMismatch { got: usize, expected: usize },

    /// A sample symbol is outside its vertex alphabet.
    #[error("bad symbol {symbol} for vertex {vertex} (alphabet size {q}) at sample row {row}")]
    BadSymbol {
        row: usize,
        vertex: usize,
        symbol: usize,
        q: usize,
    },

    /// Sample count preconditions (n >= 1, shape) violated.
    #[error("invalid sample set: {0}")]
    InvalidSampleSet(String),

    /// Joint state space exceeds the enumeration cap.
    #[error("state space has {size} configurations, above the enumeration cap {cap}; use the Gibbs sampler or raise the cap")]
    StateSpaceTooLarge { size: u128, cap: u128 },

    /// Solver accuracy outside the guaranteed range (0, 1].
    #[error("epsilon {0} outside (0, 1]")]
    EpsilonOutOfRange(f64),

    /// A hyperparameter failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Constraint descriptor unsupported for the requested operation.
    #[error("unsupported constraint set: {0}")]
    UnsupportedConstraint(String),

    /// The factor group of a scope does not carry all assignments, so no
    /// equi-cost projection exists.
    #[error("constraint set is not parametrically complete: {0}")]
    NotParametricallyComplete(String),

    /// Numerical failure inside a solve; carries node/round context.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Estimate/truth inputs refer to different families.
    #[error("family mismatch: {0}")]
    FamilyMismatch(String),

    /// A clique average was requested for a node without an estimate.
    #[error("missing estimate for vertex {vertex} on clique {clique:?}")]
    MissingEstimate { vertex: usize, clique: Vec<usize> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// Malformed text input (sample files, CLI ranges).
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for solver failures, 3 for anything
    /// else (validation, I/O, parse).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SolverFailure(_) => 2,
            _ => 3,
        }
    }
}

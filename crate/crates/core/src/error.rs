//! Error types shared across the solver modules.

use thiserror::Error;

/// Errors raised while validating a raw game description.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("unknown identifier {id:?} referenced by {context}")]
    MissingKey { id: String, context: String },
    #[error("duplicate entry for (state {state:?}, min action {min_action:?}, max action {max_action:?})")]
    DuplicateKey {
        state: String,
        min_action: String,
        max_action: String,
    },
    #[error("transition row for (state {state:?}, min action {min_action:?}, max action {max_action:?}) is invalid: {reason}")]
    ProbabilityRowInvalid {
        state: String,
        min_action: String,
        max_action: String,
        reason: String,
    },
    #[error("state {state:?} has an empty action set")]
    EmptyActionSet { state: String },
    #[error("payment vector has {got} entries, game has {expected}")]
    PaymentLengthMismatch { got: usize, expected: usize },
    #[error("game description is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Errors raised by the structural (support-only) analysis.
#[derive(Debug, Error)]
pub enum StructuralError {
    #[error("game has {n} states, exceeding the subset enumeration cap of {cap}")]
    StateCapExceeded { n: usize, cap: usize },
    #[error("subset is not a member of the required family")]
    NotInFamily,
    #[error("witness iteration did not reach residual {tol} within {budget} steps (best residual {residual})")]
    IterationBudgetExceeded {
        tol: f64,
        budget: usize,
        residual: f64,
        best: Vec<f64>,
    },
}

/// Errors from the max-plus layer.
#[derive(Debug, Error)]
pub enum MaxPlusError {
    #[error("matrix is not square")]
    NotSquare,
    #[error("row {0} is identically -inf")]
    EmptyRow(usize),
    #[error("precedence graph has no circuit")]
    NoCircuit,
    #[error("game is not deterministic: entry (state {state}, min action {min_action}, max action {max_action}) has support size {support}")]
    NotDeterministic {
        state: usize,
        min_action: usize,
        max_action: usize,
        support: usize,
    },
}

/// Errors from the stochastic one-player machinery.
#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("matrix row {row} is not a probability row: {reason}")]
    NotStochastic { row: usize, reason: String },
    #[error("linear system is singular or numerically defective")]
    SingularSystem,
    #[error("policy improvement revisited a policy without progress")]
    CycleDetected,
    #[error("enumeration of {what} exceeds the cap of {cap}")]
    EnumerationCapExceeded { what: &'static str, cap: u128 },
    #[error("no eigenpair available for the requested operation")]
    NoEigenpair,
    #[error("policy evaluation residual {residual} exceeds tolerance {tol}")]
    ResidualExceeded { residual: f64, tol: f64 },
}

/// Errors from two-player policy iteration and the uniqueness certificate.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error("outer iteration bound of {bound} exceeded (possible degeneracy/cycling)")]
    MaxOuterIterationsExceeded { bound: usize },
    #[error("policy enumeration exceeds the cap of {cap}")]
    EnumerationCapExceeded { cap: u128 },
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

/// Errors from the parameter-space explorer.
#[derive(Debug, Error)]
pub enum FanError {
    #[error("slice directions are linearly dependent or empty")]
    DependentDirections,
    #[error("invalid slice: {0}")]
    BadSlice(String),
    #[error("game is not structurally solvable; slice exploration requires a SOLVABLE verdict")]
    NotSolvable,
    #[error("elementary circuit enumeration exceeds the cap of {cap}")]
    CircuitCapExceeded { cap: usize },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error(transparent)]
    MaxPlus(#[from] MaxPlusError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

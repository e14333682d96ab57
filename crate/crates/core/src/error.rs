use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("instance has no bidders or no items")]
    EmptyInstance,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("bidder {bidder} has a negative value for item {item}")]
    NegativeValue { bidder: usize, item: usize },
    #[error("bidder {bidder} values every item at zero")]
    DegenerateBidder { bidder: usize },
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("infeasible allocation: {0}")]
    InvalidAllocation(String),
    #[error("bidder {bidder} has zero PF utility")]
    ZeroPfUtility { bidder: usize },
    #[error("PF solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    SolverFailure { iterations: usize, residual: f64 },
    #[error("{mechanism} requires {requirement}")]
    ShapeMismatch {
        mechanism: &'static str,
        requirement: &'static str,
    },
    #[error("strong demand matching exceeded its iteration budget of {budget}")]
    IterationBudget { budget: usize },
    #[error("brute force over {cells} grid cells exceeds the limit of {limit}")]
    Intractable { cells: u128, limit: u128 },
    #[error("{context}: {message}")]
    Parse { context: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

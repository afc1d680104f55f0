use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("all bids on the query are zero; the outcome is undefined")]
    AmbiguousOutcome,

    #[error("mechanism needs {need} bidders, got {got}")]
    BidderCount { need: &'static str, got: usize },

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("oracle precondition violated: {0}")]
    OraclePrecondition(String),

    #[error("bids violate advertiser {advertiser}'s ROS constraint (slack {slack:e})")]
    Infeasible { advertiser: usize, slack: f64 },

    #[error("no convergence after {iterations} iterations: {detail}")]
    NoConvergence { iterations: usize, detail: String },

    #[error("parameter out of domain: {0}")]
    Domain(String),
}
